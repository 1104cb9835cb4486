"""EPR photon-pair experiment in the two-dimensional helicity basis.

Basis state 0 is the pair with both helicities +1, state 1 the pair with
both -1. Photon pairs from the calcium cascade idealized as a single
creation event; the two wavelengths are metadata, the free energies of the
two basis states are degenerate, so free flight contributes an identical
phase to bra and ket that cancels in the pairing.

Each process of the unraveling is initialized independently: sqrt(2)|0> or
-sqrt(2)|1> with probability 1/2 each. The pair therefore takes one of four
combinations with probability 1/4, and the ensemble mean is the maximally
entangled rank-1 density matrix

    rho = 1/2 [[1, -1], [-1, 1]]

without any superposition inside a trajectory. Polarizer coincidence
observables act in the circular basis; with counter-rotating polarizers the
relevant angle is Theta = theta1 + theta2.
"""

import numpy as np

from .amone import build_jump_table
from .engine import InitialSampler, estimate_observable
from .model import _readonly, make_model
from .streams import derive_seed

# Calcium cascade wavelengths (metadata; the helicity energies are degenerate).
WAVELENGTH_1 = 551.3e-9
WAVELENGTH_2 = 422.7e-9

KINDS = ("parallel-parallel", "perp-perp", "parallel-perp", "perp-parallel")

# Four polarizer settings (a, a', b, b') maximizing the CHSH combination
# |E(a,b) - E(a,b') + E(a',b) + E(a',b')| for E(t1, t2) = -cos(2(t1+t2)).
CHSH_CANONICAL_ANGLES = (0.0, np.pi / 4, -np.pi / 8, -3 * np.pi / 8)


def epr_model(energy=0.0, hbar=1.0):
    """Two-state model with degenerate energies and no interaction: the
    photons fly freely between creation and detection."""
    return make_model([energy, energy], np.zeros((2, 2)), hbar)


def epr_initial_sampler():
    """Independent initialization: sqrt(2)|0> or -sqrt(2)|1>, each with
    probability 1/2."""
    root2 = np.sqrt(2.0)
    return InitialSampler(
        indices=_readonly(np.array([0, 1], dtype=np.int64)),
        probs=_readonly(np.array([0.5, 0.5])),
        values=_readonly(np.array([root2, -root2], dtype=complex)),
    )


def epr_observable(kind, theta1, theta2):
    """Coincidence observable for the given outcome kind at polarizer angles
    theta1, theta2 (radians), in the circular-polarization basis."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}, expected one of {KINDS}")
    sign = 1.0 if kind in ("parallel-parallel", "perp-perp") else -1.0
    phase = np.exp(2j * (theta1 + theta2))
    return 0.25 * np.array([[1.0, sign * phase], [sign * np.conj(phase), 1.0]])


def epr_exact_probability(kind, theta1, theta2):
    """tr(rho_EPR * A_kind): sin^2(Theta)/2 for matching outcomes,
    cos^2(Theta)/2 for mixed ones."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}, expected one of {KINDS}")
    theta = theta1 + theta2
    if kind in ("parallel-parallel", "perp-perp"):
        return 0.5 * np.sin(theta) ** 2
    return 0.5 * np.cos(theta) ** 2


def correlation(theta1, theta2):
    """E(theta1, theta2) = P_pp + P_xx - P_px - P_xp = -cos(2(theta1+theta2))."""
    return -np.cos(2.0 * (theta1 + theta2))


def correlation_observable(theta1, theta2):
    """Single observable whose mean is the correlation E(theta1, theta2)."""
    phase = np.exp(2j * (theta1 + theta2))
    return np.array([[0.0, phase], [np.conj(phase), 0.0]])


def chsh_value(a, a_prime, b, b_prime):
    """|E(a,b) - E(a,b') + E(a',b) + E(a',b')| from the closed form."""
    return abs(correlation(a, b) - correlation(a, b_prime)
               + correlation(a_prime, b) + correlation(a_prime, b_prime))


def epr_mc_probability(kind, theta1, theta2, pairs, seed, t=0.0, threads=1):
    """Monte Carlo coincidence probability via the two-process estimator."""
    table = build_jump_table(epr_model())
    return estimate_observable(epr_initial_sampler(), table, t,
                               epr_observable(kind, theta1, theta2),
                               pairs, seed, threads=threads)


def correlation_mc(theta1, theta2, pairs, seed, t=0.0, threads=1):
    table = build_jump_table(epr_model())
    return estimate_observable(epr_initial_sampler(), table, t,
                               correlation_observable(theta1, theta2),
                               pairs, seed, threads=threads)


def chsh_mc(a, a_prime, b, b_prime, pairs, seed, threads=1):
    """Monte Carlo CHSH value with propagated standard error.

    The four correlations are estimated from independent ensembles of
    `pairs` trajectory pairs each (child seeds derived from `seed`).
    """
    settings = [(a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)]
    signs = [1.0, -1.0, 1.0, 1.0]
    total = 0.0
    var = 0.0
    for i, ((t1, t2), sign) in enumerate(zip(settings, signs)):
        est = correlation_mc(t1, t2, pairs, derive_seed(seed, 7001, i), threads=threads)
        total += sign * est.mean
        var += est.stderr ** 2
    return abs(total), float(np.sqrt(var))
