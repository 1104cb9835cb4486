"""Distinguished-basis Hamiltonian models and the exact von Neumann reference.

A model is a splitting H = H_free + H_int on a finite Hilbert space with a
fixed orthonormal basis |m>, m = 0..dim-1. H_free is diagonal with real
eigenvalues E_m, H_int is a Hermitian matrix V with V[l, m] = <l|H_int|m>.
The density matrix evolves by i*hbar*drho/dt = [H, rho]; `exact_evolve`
integrates this exactly through an eigendecomposition of H and serves as the
brute-force oracle that all stochastic estimates are checked against.

All values are immutable after construction and safe to share across threads.
"""

from dataclasses import dataclass
import json

import numpy as np

# Hermiticity tolerance, relative to the largest matrix-element magnitude.
# Inputs are authored or generated, not measured, so this is generous.
HERMITICITY_RTOL = 1e-12


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def hermiticity_defect(matrix):
    """Return (defect, (l, m)) where defect = max |M - M^dagger| and (l, m)
    locates the worst-violating entry."""
    d = np.abs(matrix - matrix.conj().T)
    lm = np.unravel_index(np.argmax(d), d.shape)
    return float(d[lm]), (int(lm[0]), int(lm[1]))


def require_hermitian(matrix, name="matrix", rtol=HERMITICITY_RTOL):
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    scale = np.abs(matrix).max()
    defect, (l, m) = hermiticity_defect(matrix)
    if defect > rtol * max(scale, 1.0):
        raise ValueError(
            f"{name} is not Hermitian: worst entry ({l}, {m}), "
            f"|M[{l},{m}] - conj(M[{m},{l}])| = {defect:.3e} "
            f"exceeds {rtol:g} * max|M| = {rtol * max(scale, 1.0):.3e}"
        )
    return matrix


@dataclass(frozen=True)
class HamiltonianModel:
    """Validated distinguished-basis model. Build with `make_model` or
    `validate_model`, not directly."""

    dim: int
    free_energies: np.ndarray   # (dim,) real, E_m
    interaction: np.ndarray     # (dim, dim) complex Hermitian, V[l, m] = <l|H_int|m>
    hbar: float = 1.0

    def hamiltonian(self):
        """Full H = diag(E) + V as a complex matrix."""
        return np.diag(self.free_energies.astype(complex)) + self.interaction


def make_model(free_energies, interaction, hbar=1.0):
    """Validate raw arrays and construct a HamiltonianModel.

    Checks: square Hermitian interaction (within HERMITICITY_RTOL of the
    largest element), real diagonal, matching lengths, finite entries,
    hbar > 0. Raises ValueError naming the offending entry otherwise.
    """
    energies = np.asarray(free_energies, dtype=float)
    if energies.ndim != 1 or energies.size < 1:
        raise ValueError(f"free_energies must be a nonempty 1-d sequence, got shape {energies.shape}")
    if not np.all(np.isfinite(energies)):
        raise ValueError("free_energies contains non-finite entries")
    dim = energies.size
    V = require_hermitian(interaction, name="interaction")
    if V.shape != (dim, dim):
        raise ValueError(
            f"interaction shape {V.shape} does not match free_energies length {dim}"
        )
    # Real diagonal is implied by Hermiticity but checked independently.
    scale = max(np.abs(V).max(), 1.0)
    imdiag = np.abs(np.diag(V).imag)
    if imdiag.max() > HERMITICITY_RTOL * scale:
        m = int(np.argmax(imdiag))
        raise ValueError(f"diagonal entry V[{m},{m}] = {V[m, m]} is not real")
    if not (hbar > 0):
        raise ValueError(f"hbar must be positive, got {hbar}")
    V = V.copy()
    np.fill_diagonal(V, np.diag(V).real)  # drop rounding-level imaginary parts
    return HamiltonianModel(
        dim=dim,
        free_energies=_readonly(energies),
        interaction=_readonly(V),
        hbar=float(hbar),
    )


def validate_model(raw):
    """Construct a model from a mapping with keys dim, hbar, free_energies,
    interaction (entries as [re, im] pairs or complex numbers)."""
    try:
        dim = int(raw["dim"])
        hbar = float(raw.get("hbar", 1.0))
        energies = raw["free_energies"]
        inter = raw["interaction"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"model data is missing required keys: {exc}") from exc
    V = _parse_complex_matrix(inter)
    model = make_model(energies, V, hbar)
    if model.dim != dim:
        raise ValueError(f"declared dim {dim} does not match arrays of size {model.dim}")
    return model


def _parse_complex_matrix(rows):
    out = []
    for row in rows:
        out.append([complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e)
                    for e in row])
    return np.array(out, dtype=complex)


def diagonal_shift(model, eps):
    """Add eps to every diagonal element of the interaction.

    The shift eps*I commutes with everything, so it only multiplies each
    process by a global phase that cancels in the bra-ket pairing; exact
    density-matrix predictions are unchanged. It is the standard way to keep
    all diagonal interaction elements away from zero, where the jump
    construction becomes singular.
    """
    V = model.interaction + float(eps) * np.eye(model.dim)
    return make_model(model.free_energies, V, model.hbar)


# ---------------------------------------------------------------------------
# density-matrix algebra

def exact_evolve(rho0, model, t):
    """Evolve rho0 for time t under the full Hamiltonian: U rho0 U^dagger
    with U = exp(-i H t / hbar), via eigendecomposition of H.

    Eliminates step-size error entirely; preferred over stepwise integration
    at the small dimensions this package targets.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (model.dim, model.dim):
        raise ValueError(f"rho0 shape {rho0.shape} does not match dim {model.dim}")
    if t < 0:
        raise ValueError("t must be >= 0")
    w, Q = np.linalg.eigh(model.hamiltonian())
    phases = np.exp(-1j * w * t / model.hbar)
    U = (Q * phases) @ Q.conj().T
    return U @ rho0 @ U.conj().T


def trace_inner(rho, A):
    """tr(rho A). Real up to rounding when both arguments are Hermitian."""
    rho = np.asarray(rho, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if rho.shape != A.shape or rho.ndim != 2:
        raise ValueError(f"shape mismatch: rho {rho.shape} vs A {A.shape}")
    # tr(rho A) = sum_{l,m} rho[l, m] A[m, l]
    return complex(np.sum(rho * A.T))


# ---------------------------------------------------------------------------
# model files (JSON, bit-exact round trip)

def model_to_dict(model):
    return {
        "dim": model.dim,
        "hbar": model.hbar,
        "free_energies": [float(e) for e in model.free_energies],
        "interaction": [[[float(v.real), float(v.imag)] for v in row]
                        for row in model.interaction],
    }


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return validate_model(json.load(fh))
