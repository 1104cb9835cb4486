"""Pairs of independent jump processes and the bilinear density estimator.

Each trajectory is a piecewise-free path c_t |m_t>: the amplitude picks up
exp(drift * dt) between jumps (drift = -i*E_eff/hbar plus the growth rate of
compensated columns) and a factor f[l, m] at each jump m -> l. Waiting times
are exponential with the per-state rate. A pair of independent, identically
distributed trajectories (ket and bra) contributes the single rank-1 term
c * conj(d) in entry (m_t, n_t); averaging N pairs estimates the density
matrix, and conj(d) * A[n, m] * c estimates tr(rho A).

Everything is deterministic in (seed, N): trajectories are processed in
fixed chunks of streams.CHUNK, each chunk draws from counter-based
substreams keyed by (seed, side, chunk, step), and partial sums are merged
in chunk order. Thread count affects wall time only.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import require_hermitian, _readonly
from .streams import BRA, KET, chunk_ranges, substream

# Trajectories whose amplitude magnitude passes this are aborted: it signals
# runaway weight growth, not a recoverable condition.
MAX_AMPLITUDE = 1e100

_MAX_STEPS = 10 ** 6

# Fixed histogram edges for the |c * conj(d)| weight diagnostic.
WEIGHT_HIST_EDGES = np.concatenate(([0.0], np.logspace(-6, 6, 25), [np.inf]))


class AmplitudeOverflow(RuntimeError):
    """Raised when a trajectory amplitude exceeds MAX_AMPLITUDE."""


@dataclass(frozen=True)
class ProcessState:
    """One stochastic process at an instant: c_t |index_t> at time t."""
    index: int
    amplitude: complex
    time: float


@dataclass(frozen=True)
class InitialSampler:
    """Distribution of initial process states.

    A draw lands on basis state indices[k] with probability probs[k] and
    amplitude values[k]. Independent ket/bra draws from the same sampler have
    E[|phi><psi|] = a a^dagger with a[indices] = probs * values.
    """
    indices: np.ndarray   # (support,), int
    probs: np.ndarray     # (support,), positive, sums to 1
    values: np.ndarray    # (support,), complex

    def __post_init__(self):
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"sampler probabilities sum to {self.probs.sum()!r}, not 1")
        if np.any(self.probs <= 0):
            raise ValueError("sampler probabilities must be positive on the support")
        if not np.all(np.isfinite(self.values.view(float))) or np.any(self.values == 0):
            raise ValueError("sampler amplitudes must be finite and nonzero")

    @property
    def cum_probs(self):
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def mean_vector(self, dim):
        """Expected amplitude vector a, a[m] = q_m * value_m on the support."""
        a = np.zeros(dim, dtype=complex)
        a[self.indices] = self.probs * self.values
        return a

    def mean_matrix(self, dim):
        """Exact E[|phi><psi|] over independent draws: a a^dagger."""
        a = self.mean_vector(dim)
        return np.outer(a, a.conj())


def sampler_from_amplitudes(amps, weights=None):
    """Sampler reproducing the pure state with amplitude vector `amps`.

    amps must be normalized (sum |a|^2 = 1 within 1e-10). Draws land on m
    with probability q_m and value a_m / q_m, so independent bra/ket draws
    give E[|phi><psi|] = a a^dagger exactly. Default weights are q = |a|^2;
    if any support amplitude is extreme (|a|^2 < 1e-6) the default switches
    to uniform over the support to bound the value magnitudes.
    """
    a = np.asarray(amps, dtype=complex)
    norm = float(np.sum(np.abs(a) ** 2))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"amplitudes are not normalized: sum |a|^2 = {norm!r}")
    support = np.flatnonzero(a != 0)
    if weights is None:
        q = np.abs(a[support]) ** 2
        if q.min() < 1e-6:
            q = np.full(support.size, 1.0 / support.size)
        q = q / q.sum()
    else:
        q_full = np.asarray(weights, dtype=float)
        if q_full.shape != a.shape:
            raise ValueError("weights shape does not match amplitudes")
        if abs(q_full.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {q_full.sum()!r}, not 1")
        bad = np.flatnonzero((q_full > 0) & (a == 0))
        if bad.size:
            raise ValueError(f"zero amplitude with positive weight at index {bad[0]}")
        missing = np.flatnonzero((q_full <= 0) & (a != 0))
        if missing.size:
            raise ValueError(f"nonzero amplitude with no weight at index {missing[0]}")
        q = q_full[support]
    values = a[support] / q
    return InitialSampler(indices=_readonly(support.astype(np.int64)),
                          probs=_readonly(q), values=_readonly(values))


# ---------------------------------------------------------------------------
# single-trajectory operations

def free_phase(state, dt, table):
    """Free evolution for dt: phase -E_eff*dt/hbar, plus the deterministic
    growth of compensated columns. Index unchanged."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    amp = state.amplitude * np.exp(table.drift[state.index] * dt)
    return ProcessState(state.index, complex(amp), state.time + dt)


def next_jump_time(state, table, rng):
    """Exponential waiting time with the current state's rate; inf if 0."""
    rate = table.rates[state.index]
    if rate == 0.0:
        return np.inf
    return -np.log1p(-rng.random()) / rate


def apply_jump(state, table, rng):
    """Draw a target from p(.|m) and multiply the amplitude by f[target, m].

    Zero-probability targets are unreachable: the draw u lies in (0, 1] and a
    target is selected only if its cumulative cell has positive width.
    """
    m = state.index
    if table.rates[m] <= 0.0:
        raise ValueError(f"state {m} has no jump channel (rate 0)")
    u = 1.0 - rng.random()
    target = int(np.sum(table.cum_probs[:, m] < u))
    amp = state.amplitude * table.factors[target, m]
    return ProcessState(target, complex(amp), state.time)


def evolve_process(state, table, t_end, rng):
    """Alternate free evolution and jumps until t_end (exact jump times)."""
    if t_end < state.time:
        raise ValueError("t_end precedes the state's current time")
    while True:
        tau = next_jump_time(state, table, rng)
        remaining = t_end - state.time
        if tau >= remaining:
            return free_phase(state, remaining, table)
        state = apply_jump(free_phase(state, tau, table), table, rng)
        if abs(state.amplitude) > MAX_AMPLITUDE:
            raise AmplitudeOverflow(
                f"trajectory amplitude {abs(state.amplitude):.3e} exceeded "
                f"{MAX_AMPLITUDE:.0e} at t = {state.time}"
            )


# ---------------------------------------------------------------------------
# vectorized ensembles

def _draw_initial(sampler, count, seed, side, chunk_id):
    gen = substream(seed, side, chunk_id, 0)
    u = 1.0 - gen.random(count)
    k = np.sum(sampler.cum_probs[:, None] < u[None, :], axis=0)
    return sampler.indices[k].copy(), sampler.values[k].astype(complex)


def _evolve_ensemble(table, idx, amp, t, seed, side, chunk_id):
    """Evolve a block of trajectories in lockstep to time t.

    Step k of the block consumes a fixed-size draw from the substream
    (seed, side, chunk_id, k), so the result is independent of how blocks
    are scheduled.
    """
    drift = table.drift
    rates = table.rates
    cum = table.cum_probs
    t_rem = np.full(idx.shape, float(t))
    step = 0
    while True:
        active = t_rem > 0.0
        if not active.any():
            return idx, amp
        step += 1
        if step > _MAX_STEPS:
            raise RuntimeError("trajectory step limit exceeded")
        gen = substream(seed, side, chunk_id, step)
        u_wait = gen.random(idx.size)
        u_tgt = 1.0 - gen.random(idx.size)
        r = rates[idx]
        wait = np.full(idx.size, np.inf)
        pos = active & (r > 0.0)
        wait[pos] = -np.log1p(-u_wait[pos]) / r[pos]
        jump = wait < t_rem
        dwell = np.where(jump, wait, t_rem)
        amp = amp * np.exp(drift[idx] * dwell)
        t_rem = t_rem - dwell
        if jump.any():
            src = idx[jump]
            target = np.sum(cum[:, src] < u_tgt[jump][None, :], axis=0)
            amp[jump] *= table.factors[target, src]
            idx[jump] = target
            if np.abs(amp[jump]).max() > MAX_AMPLITUDE:
                raise AmplitudeOverflow(
                    f"trajectory amplitude exceeded {MAX_AMPLITUDE:.0e} "
                    f"in chunk {chunk_id} at step {step}"
                )


def _pair_chunk(sampler, table, t, seed, chunk_id, count):
    ik, ak = _draw_initial(sampler, count, seed, KET, chunk_id)
    ik, ak = _evolve_ensemble(table, ik, ak, t, seed, KET, chunk_id)
    ib, ab = _draw_initial(sampler, count, seed, BRA, chunk_id)
    ib, ab = _evolve_ensemble(table, ib, ab, t, seed, BRA, chunk_id)
    return ik, ak, ib, ab


def _map_chunks(worker, n_items, threads):
    chunks = list(chunk_ranges(n_items))
    if threads <= 1:
        return [worker(cid, count) for cid, _start, count in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, cid, count) for cid, _start, count in chunks]
        return [f.result() for f in futures]  # chunk order, regardless of completion


# ---------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class DensityEstimate:
    """Bilinear density estimate (1/N) sum c*conj(d) |m><n| with errors.

    stderr_re/stderr_im are per-entry standard errors of the real and
    imaginary parts. weight_hist counts |c*conj(d)| per pair against
    WEIGHT_HIST_EDGES, a diagnostic for norm drift of the processes.
    """
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    count: int
    trace_mean: complex
    trace_stderr: float
    weight_hist: np.ndarray

    def z_scores(self, reference):
        """Per-entry (mean - reference) / stderr for both parts.

        Entries with zero stderr give z = 0 when the deviation is at rounding
        level and inf otherwise.
        """
        ref = np.asarray(reference, dtype=complex)
        z_re = _safe_z(self.mean.real - ref.real, self.stderr_re)
        z_im = _safe_z(self.mean.imag - ref.imag, self.stderr_im)
        return z_re, z_im


def _safe_z(diff, stderr):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderr > 0, diff / np.where(stderr > 0, stderr, 1.0),
                     np.where(np.abs(diff) <= 1e-12, 0.0, np.inf))
    return z


@dataclass(frozen=True)
class ObservableEstimate:
    mean: float        # real-part mean of conj(d) * A[n, m] * c
    stderr: float
    imag_mean: float   # consistent with 0 for Hermitian A
    imag_stderr: float
    count: int


def estimate_density(sampler, table, t, pairs, seed, threads=1):
    """Estimate rho_t from `pairs` independent bra-ket trajectory pairs.

    Each pair contributes its final-time rank-1 term only. Requires
    pairs >= 2 (sample variance). Deterministic in (seed, pairs, table).
    """
    pairs = int(pairs)
    if pairs < 2:
        raise ValueError(f"need at least 2 pairs, got {pairs}")
    dim = table.dim
    if sampler.indices.max() >= dim:
        raise ValueError("sampler index out of range for this model")

    def worker(cid, count):
        ik, ak, ib, ab = _pair_chunk(sampler, table, t, seed, cid, count)
        w = ak * np.conj(ab)
        s1 = np.zeros((dim, dim), dtype=complex)
        s2r = np.zeros((dim, dim))
        s2i = np.zeros((dim, dim))
        np.add.at(s1, (ik, ib), w)
        np.add.at(s2r, (ik, ib), w.real ** 2)
        np.add.at(s2i, (ik, ib), w.imag ** 2)
        wd = w[ik == ib]
        hist, _ = np.histogram(np.abs(w), bins=WEIGHT_HIST_EDGES)
        return s1, s2r, s2i, wd.sum(), (wd.real ** 2).sum(), hist

    parts = _map_chunks(worker, pairs, threads)
    s1 = sum(p[0] for p in parts)
    s2r = sum(p[1] for p in parts)
    s2i = sum(p[2] for p in parts)
    tr1 = sum(p[3] for p in parts)
    tr2re = sum(p[4] for p in parts)
    hist = sum(p[5] for p in parts)

    n = pairs
    mean = s1 / n
    var_re = np.maximum(s2r - n * mean.real ** 2, 0.0) / (n - 1)
    var_im = np.maximum(s2i - n * mean.imag ** 2, 0.0) / (n - 1)
    tr_mean = tr1 / n
    tr_var = max(tr2re - n * tr_mean.real ** 2, 0.0) / (n - 1)
    return DensityEstimate(
        mean=mean,
        stderr_re=np.sqrt(var_re / n),
        stderr_im=np.sqrt(var_im / n),
        count=n,
        trace_mean=complex(tr_mean),
        trace_stderr=float(np.sqrt(tr_var / n)),
        weight_hist=hist,
    )


def estimate_observable(sampler, table, t, observable, pairs, seed, threads=1):
    """Estimate <A> = E[ conj(d) * A[n, m] * c ] over trajectory pairs.

    Reports the real-part mean with its standard error plus the imaginary
    part, which must be statistically consistent with zero for Hermitian A.
    """
    pairs = int(pairs)
    if pairs < 2:
        raise ValueError(f"need at least 2 pairs, got {pairs}")
    A = require_hermitian(observable, name="observable")
    if A.shape != (table.dim, table.dim):
        raise ValueError(f"observable shape {A.shape} does not match dim {table.dim}")

    def worker(cid, count):
        ik, ak, ib, ab = _pair_chunk(sampler, table, t, seed, cid, count)
        v = np.conj(ab) * A[ib, ik] * ak
        return v.sum(), (v.real ** 2).sum(), (v.imag ** 2).sum()

    parts = _map_chunks(worker, pairs, threads)
    s1 = sum(p[0] for p in parts)
    s2r = sum(p[1] for p in parts)
    s2i = sum(p[2] for p in parts)
    n = pairs
    mean = s1 / n
    var_re = max(s2r - n * mean.real ** 2, 0.0) / (n - 1)
    var_im = max(s2i - n * mean.imag ** 2, 0.0) / (n - 1)
    return ObservableEstimate(
        mean=float(mean.real),
        stderr=float(np.sqrt(var_re / n)),
        imag_mean=float(mean.imag),
        imag_stderr=float(np.sqrt(var_im / n)),
        count=n,
    )
