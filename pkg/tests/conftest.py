import numpy as np
import pytest

from braketsim import build_jump_table, make_model


def random_hermitian(dim, rng, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def conditioned_random_model(seed, dim=4):
    """Random Hermitian model whose diagonal is kept comparable to the
    off-diagonal column sums, so no jump column sits near the singular
    p_mm -> 0 corner (where self-jump factors blow up the variance)."""
    rng = np.random.default_rng(seed)
    V = random_hermitian(dim, rng)
    off = np.abs(V).sum(axis=0) - np.abs(np.diag(V))
    V = V + 0.5 * off.max() * np.eye(dim)
    return make_model(rng.normal(size=dim), V)


def random_unit_amplitudes(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return a / np.linalg.norm(a)


@pytest.fixture
def rabi_model():
    """Two-state flip model: E = (0, 0), V = [[0, 1], [1, 0]]. The exact
    solution from |0><0| is rho_00 = cos^2(t), rho_11 = sin^2(t)."""
    return make_model([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def rabi_table(rabi_model):
    return build_jump_table(rabi_model)
