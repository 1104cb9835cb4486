import numpy as np
import pytest

from braketsim import (AmplitudeOverflow, ProcessState, apply_jump,
                       build_jump_table, estimate_density, estimate_observable,
                       evolve_process, exact_evolve, free_phase, make_model,
                       next_jump_time, sampler_from_amplitudes)
from braketsim.engine import WEIGHT_HIST_EDGES
from conftest import conditioned_random_model, random_unit_amplitudes

Z = 5.0


# ---------------------------------------------------------------------------
# initial samplers

def test_point_mass_sampler():
    s = sampler_from_amplitudes([1.0, 0.0])
    assert list(s.indices) == [0]
    assert s.values[0] == 1.0
    assert s.probs[0] == 1.0


def test_epr_style_amplitudes_give_sqrt2_values():
    a = np.array([1.0, -1.0]) / np.sqrt(2.0)
    s = sampler_from_amplitudes(a, weights=[0.5, 0.5])
    assert s.values[0] == pytest.approx(np.sqrt(2.0), rel=1e-15)
    assert s.values[1] == pytest.approx(-np.sqrt(2.0), rel=1e-15)


def test_default_weights_born_then_uniform_fallback():
    a = np.array([0.6, 0.8], dtype=complex)
    s = sampler_from_amplitudes(a)
    assert np.allclose(s.probs, [0.36, 0.64])
    tiny = 1e-4
    a = np.array([np.sqrt(1 - tiny ** 2), tiny], dtype=complex)
    s = sampler_from_amplitudes(a)  # |a_1|^2 = 1e-8 is extreme, switch to uniform
    assert np.allclose(s.probs, [0.5, 0.5])


def test_sampler_rejections():
    with pytest.raises(ValueError, match="not normalized"):
        sampler_from_amplitudes([1.0, 1.0])
    with pytest.raises(ValueError, match="zero amplitude with positive weight"):
        sampler_from_amplitudes([1.0, 0.0], weights=[0.5, 0.5])
    with pytest.raises(ValueError, match="sum"):
        sampler_from_amplitudes([0.6, 0.8], weights=[0.5, 0.4])
    with pytest.raises(ValueError, match="no weight"):
        sampler_from_amplitudes([0.6, 0.8], weights=[1.0, 0.0])


def test_sampler_mean_matrix_is_exact_expectation():
    a = random_unit_amplitudes(3, 4)
    s = sampler_from_amplitudes(a)
    # direct expectation over the finite support of independent bra/ket draws
    dim = a.size
    expect = np.zeros((dim, dim), complex)
    for qk, ik, vk in zip(s.probs, s.indices, s.values):
        for qb, ib, vb in zip(s.probs, s.indices, s.values):
            expect[ik, ib] += qk * qb * vk * np.conj(vb)
    assert np.allclose(expect, np.outer(a, a.conj()), atol=1e-14)
    assert np.allclose(s.mean_matrix(dim), np.outer(a, a.conj()), atol=1e-14)


# ---------------------------------------------------------------------------
# single-trajectory pieces

def zero_interaction_table(energies):
    return build_jump_table(make_model(energies, np.zeros((len(energies),) * 2)))


def test_free_phase_trivial_cases():
    state = ProcessState(0, 1.0 + 0.0j, 0.0)
    flat = zero_interaction_table([0.0, 4.0])
    out = free_phase(state, 2.7, flat)
    assert out.amplitude == 1.0
    assert out.time == 2.7

    periodic = zero_interaction_table([1.0, 0.0])
    out = free_phase(state, 2 * np.pi, periodic)
    assert abs(out.amplitude - 1.0) < 1e-12
    out = free_phase(state, np.pi, periodic)
    assert abs(out.amplitude + 1.0) < 1e-12
    with pytest.raises(ValueError):
        free_phase(state, -0.1, flat)


def test_next_jump_time_zero_rate_never_fires():
    table = zero_interaction_table([0.0, 0.0])
    rng = np.random.default_rng(0)
    assert next_jump_time(ProcessState(0, 1.0, 0.0), table, rng) == np.inf


def test_waiting_time_moments_and_survival(rabi_table):
    rng = np.random.default_rng(123)
    n = 10 ** 6
    state = ProcessState(0, 1.0, 0.0)
    taus = np.array([next_jump_time(state, rabi_table, rng) for _ in range(n)])
    rate = rabi_table.rates[0]
    # mean 1/r within 5 standard errors (stderr of the mean = 1/(r sqrt(n)))
    assert abs(taus.mean() - 1.0 / rate) < Z / (rate * np.sqrt(n))
    # survival P(tau > 1/r) = exp(-1) within 5 binomial standard errors
    p_hat = np.mean(taus > 1.0 / rate)
    p = np.exp(-1.0)
    assert abs(p_hat - p) < Z * np.sqrt(p * (1 - p) / n)


def test_apply_jump_single_target(rabi_table):
    rng = np.random.default_rng(5)
    state = ProcessState(0, 2.0 + 1.0j, 0.3)
    out = apply_jump(state, rabi_table, rng)
    assert out.index == 1
    assert out.amplitude == pytest.approx((2.0 + 1.0j) * -1j)
    assert out.time == 0.3
    with pytest.raises(ValueError, match="rate 0"):
        apply_jump(state, zero_interaction_table([0.0, 0.0]), rng)


def test_apply_jump_multinomial_frequencies():
    # column 0 of a 3-state model with |V| column profile (1, 2, 1)
    V = np.array([[1.0, 2.0, 1.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    table = build_jump_table(make_model([0.0, 0.0, 0.0], V))
    probs = table.probs[:, 0]
    rng = np.random.default_rng(8)
    n = 10 ** 5
    counts = np.zeros(3)
    state = ProcessState(0, 1.0, 0.0)
    for _ in range(n):
        counts[apply_jump(state, table, rng).index] += 1
    for l in range(3):
        se = np.sqrt(probs[l] * (1 - probs[l]) / n)
        assert abs(counts[l] / n - probs[l]) < Z * se
    # off-diagonal jump changes the magnitude by exactly S
    out = apply_jump(ProcessState(0, 1.0, 0.0), table, np.random.default_rng(3))
    if out.index != 0:
        assert abs(out.amplitude) == pytest.approx(table.columns[0].S, abs=1e-15)


def test_evolve_process_pure_phase_with_zero_rates():
    table = zero_interaction_table([2.0, 0.0])
    out = evolve_process(ProcessState(0, 1.0, 0.0), table, 1.5, np.random.default_rng(0))
    assert out.index == 0
    assert abs(out.amplitude - np.exp(-2.0j * 1.5)) < 1e-12
    assert out.time == 1.5


def test_evolve_process_matches_manual_composition(rabi_table):
    # evolve_process must be exactly the alternation of free_phase and
    # apply_jump at exponential jump times, bit for bit.
    t_end = 3.0
    final = evolve_process(ProcessState(0, 1.0, 0.0), rabi_table, t_end,
                           np.random.default_rng(42))
    rng = np.random.default_rng(42)
    state = ProcessState(0, 1.0, 0.0)
    while True:
        tau = next_jump_time(state, rabi_table, rng)
        if tau >= t_end - state.time:
            state = free_phase(state, t_end - state.time, rabi_table)
            break
        state = apply_jump(free_phase(state, tau, rabi_table), rabi_table, rng)
    assert state == final


def test_evolve_process_deterministic(rabi_table):
    a = evolve_process(ProcessState(0, 1.0, 0.0), rabi_table, 2.0, np.random.default_rng(7))
    b = evolve_process(ProcessState(0, 1.0, 0.0), rabi_table, 2.0, np.random.default_rng(7))
    assert a == b


def test_jump_count_is_poisson(rabi_table):
    # With constant rate r the jump count over [0, t] is Poisson(r t).
    t, n = 3.0, 10 ** 5
    rng = np.random.default_rng(17)
    counts = np.empty(n)
    for i in range(n):
        c = 0
        elapsed = 0.0
        state = ProcessState(0, 1.0, 0.0)
        while True:
            tau = next_jump_time(state, rabi_table, rng)
            if elapsed + tau >= t:
                break
            elapsed += tau
            state = apply_jump(state, rabi_table, rng)
            c += 1
        counts[i] = c
    lam = rabi_table.rates[0] * t
    assert abs(counts.mean() - lam) < Z * np.sqrt(lam / n)


def test_amplitude_overflow_detected():
    # growth e^{r t} with r t = 300 passes the 1e100 abort threshold
    table = build_jump_table(make_model([0.0, 0.0], [[0.0, 300.0], [300.0, 0.0]]))
    with pytest.raises(AmplitudeOverflow):
        evolve_process(ProcessState(0, 1.0, 0.0), table, 1.0, np.random.default_rng(0))
    with pytest.raises(AmplitudeOverflow):
        estimate_density(sampler_from_amplitudes([1.0, 0.0]), table, 1.0, 100, seed=0)


# ---------------------------------------------------------------------------
# ensemble estimators

def test_estimate_density_requires_two_pairs(rabi_table):
    with pytest.raises(ValueError, match="at least 2"):
        estimate_density(sampler_from_amplitudes([1.0, 0.0]), rabi_table, 1.0, 1, seed=0)


def test_estimate_density_static_point_mass():
    table = zero_interaction_table([0.7, -0.2])
    sampler = sampler_from_amplitudes([1.0, 0.0])
    est = estimate_density(sampler, table, 3.0, 500, seed=2)
    expected = np.zeros((2, 2))
    expected[0, 0] = 1.0
    assert np.abs(est.mean - expected).max() < 1e-12
    # all pair weights are the same number; the variance estimate only sees
    # accumulation rounding
    assert est.stderr_re.max() < 1e-8
    assert est.stderr_im.max() < 1e-8
    assert abs(est.trace_mean - 1.0) < 1e-12
    assert est.weight_hist.sum() == 500


def test_estimate_density_rabi_vs_exact(rabi_model, rabi_table):
    sampler = sampler_from_amplitudes([1.0, 0.0])
    for t in (0.5, 1.0):
        est = estimate_density(sampler, rabi_table, t, 20_000, seed=11)
        exact = exact_evolve(sampler.mean_matrix(2), rabi_model, t)
        z_re, z_im = est.z_scores(exact)
        assert np.abs(z_re).max() < Z
        assert np.abs(z_im).max() < Z
        assert abs(est.trace_mean.real - 1.0) < Z * max(est.trace_stderr, 1e-12)


def test_estimate_density_dim4_conditioned_model():
    model = conditioned_random_model(101)
    table = build_jump_table(model)
    sampler = sampler_from_amplitudes(random_unit_amplitudes(5, 4))
    t = 0.3
    est = estimate_density(sampler, table, t, 30_000, seed=19)
    exact = exact_evolve(sampler.mean_matrix(4), model, t)
    z_re, z_im = est.z_scores(exact)
    assert np.abs(z_re).max() < Z
    assert np.abs(z_im).max() < Z


def test_estimate_density_deterministic_and_thread_invariant(rabi_table):
    sampler = sampler_from_amplitudes([0.6, 0.8])
    kwargs = dict(table=rabi_table, t=0.9, pairs=70_000, seed=33)
    a = estimate_density(sampler, **kwargs)
    b = estimate_density(sampler, **kwargs)
    c = estimate_density(sampler, **kwargs, threads=4)
    d = estimate_density(sampler, **kwargs, threads=8)
    for other in (b, c, d):
        assert np.array_equal(a.mean, other.mean)
        assert np.array_equal(a.stderr_re, other.stderr_re)
        assert np.array_equal(a.stderr_im, other.stderr_im)
        assert a.trace_mean == other.trace_mean


def test_short_time_generator_matching(rabi_model, rabi_table):
    # (E[rho_dt] - rho_0)/dt approaches the commutator; comparing against the
    # exact propagator at the same dt isolates pure Monte Carlo error.
    sampler = sampler_from_amplitudes(np.array([1.0, 1.0]) / np.sqrt(2.0))
    dt = 0.02
    est = estimate_density(sampler, rabi_table, dt, 50_000, seed=3)
    exact = exact_evolve(sampler.mean_matrix(2), rabi_model, dt)
    z_re, z_im = est.z_scores(exact)
    assert np.abs(z_re).max() < Z
    assert np.abs(z_im).max() < Z


def test_degenerate_energies_static_estimate():
    table = zero_interaction_table([1.3, 1.3])
    sampler = sampler_from_amplitudes(np.array([1.0, -1.0]) / np.sqrt(2.0),
                                      weights=[0.5, 0.5])
    early = estimate_density(sampler, table, 0.0, 5_000, seed=8)
    late = estimate_density(sampler, table, 4.0, 5_000, seed=8)
    # same pairs, identical phases on both sides: equal up to rounding
    assert np.abs(early.mean - late.mean).max() < 1e-12


def test_exchangeability_of_bra_and_ket():
    model = conditioned_random_model(102)
    table = build_jump_table(model)
    sampler = sampler_from_amplitudes(random_unit_amplitudes(6, 4))
    a = estimate_density(sampler, table, 0.25, 40_000, seed=21)
    b = estimate_density(sampler, table, 0.25, 40_000, seed=22)
    # conjugate-transposing an estimate targets the same Hermitian matrix
    diff = a.mean - b.mean.conj().T
    scale = np.sqrt(a.stderr_re ** 2 + b.stderr_re.T ** 2) + 1e-15
    assert np.abs(diff.real / scale).max() < Z
    scale_im = np.sqrt(a.stderr_im ** 2 + b.stderr_im.T ** 2) + 1e-15
    assert np.abs(diff.imag / scale_im).max() < Z


def test_estimate_observable_identity_and_projector(rabi_model, rabi_table):
    sampler = sampler_from_amplitudes([1.0, 0.0])
    est = estimate_observable(sampler, rabi_table, 0.8, np.eye(2), 20_000, seed=4)
    assert abs(est.mean - 1.0) < Z * max(est.stderr, 1e-12)
    proj = np.diag([0.0, 1.0])
    t = 0.8
    est = estimate_observable(sampler, rabi_table, t, proj, 20_000, seed=5)
    assert abs(est.mean - np.sin(t) ** 2) < Z * est.stderr
    assert abs(est.imag_mean) < Z * max(est.imag_stderr, 1e-12)


def test_estimate_observable_rejects_non_hermitian(rabi_table):
    sampler = sampler_from_amplitudes([1.0, 0.0])
    with pytest.raises(ValueError, match="Hermitian"):
        estimate_observable(sampler, rabi_table, 0.1, [[0.0, 1.0], [0.0, 0.0]],
                            100, seed=0)


def test_imaginary_part_consistent_with_zero_random_observables():
    model = conditioned_random_model(103)
    table = build_jump_table(model)
    sampler = sampler_from_amplitudes(random_unit_amplitudes(7, 4))
    rng = np.random.default_rng(55)
    for k in range(3):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        A = (a + a.conj().T) / 2
        est = estimate_observable(sampler, table, 0.2, A, 20_000, seed=60 + k)
        assert abs(est.imag_mean) < Z * max(est.imag_stderr, 1e-12)


def test_weight_histogram_edges():
    assert WEIGHT_HIST_EDGES[0] == 0.0
    assert np.isinf(WEIGHT_HIST_EDGES[-1])
