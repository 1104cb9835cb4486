"""Unique Markovian jump process for a distinguished-basis model.

For each source state |m> the process is defined by a total jump rate r_m, a
target distribution p(l|m) proportional to |V[l, m]|, and complex factors
f[l, m] multiplying the amplitude at each jump. Requiring that the ensemble
mean of a pair of such independent processes reproduces the von Neumann
commutator fixes everything except one scale per column:

    i*hbar * r_m * (p[l,m] f[l,m] - delta_lm) = V[l, m]        (matching)

    p[l,m] = |V[l,m]| / sum_l' |V[l',m]|
    r_m    = sum_l |V[l,m]| / (hbar * S_m)
    f[l,m] = -i * (V[l,m]/|V[l,m]|) * S_m              for l != m
    f[m,m] = S_m * (hbar*r_m - i*V[m,m]) / |V[m,m]|    when V[m,m] != 0

The remaining scale S_m in (0, 1] is pinned by the AMONE normalization: the
geometric mean of the jump-factor magnitudes equals one,

    |f[m,m]|**p_mm * S_m**(1 - p_mm) = 1,

which in terms of W_m = p_mm * S_m reads S ln S = W ln(W / sqrt(1 + W^2)).
`solve_amone` finds the unique root by bracketed bisection.

Two degenerate column types need care.

* p_mm = 1 (purely diagonal column): no jump can change the state, and the
  condition forces S -> 0. The diagonal element is folded into the free
  phase instead and the rate set to zero ("diagonal_folded"), which is the
  same unitary evolution without a degenerate jump channel.
* p_mm = 0 (vanishing diagonal element, off-diagonals present): the matching
  condition at l = m would require a self-jump of probability zero carrying
  an unbounded factor. That limit has a finite mean, exp(r_m * dt), so the
  column instead carries a deterministic amplitude growth rate r_m between
  jumps (`growth_rate`), which supplies the l = m matching term exactly and
  with zero added variance. Columns with V[m,m] != 0 keep the stochastic
  self-jump channel and have growth_rate 0. Note that small nonzero p_mm
  still means occasional large self-jump factors, hence noisy estimators;
  `model.diagonal_shift` is the standard remedy.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import _readonly

# Bisection interval width for the AMONE root.
BISECT_TOL = 1e-14
# Tolerance on the geometric-mean condition for built columns.
GEOMEAN_TOL = 1e-10


class AmoneRoot(NamedTuple):
    S: float
    degenerate: bool  # True only for p_mm = 1, where no off-diagonal jump exists


def _condition(S, p):
    # ln S - p * ln(p*S / sqrt(1 + (p*S)^2)), rearranged as
    # (1-p) ln S - p ln p + (p/2) log1p((p*S)^2); increasing in S on (0, 1].
    # The rearrangement keeps the sign correct when p*S underflows (its
    # square then reads as 0, the true limit of the last term).
    w = p * S
    return (1.0 - p) * np.log(S) - p * np.log(p) + 0.5 * p * np.log1p(w * w)


def solve_amone(p_mm):
    """Solve the AMONE normalization for one column.

    Returns AmoneRoot(S, degenerate) with S in (0, 1] for p_mm in [0, 1) and
    (0.0, True) at p_mm = 1. The root satisfies
    S ln S = W ln(W / sqrt(1 + W^2)) with W = p_mm * S to better than 1e-12.
    """
    p = float(p_mm)
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ValueError(f"p_mm must lie in [0, 1], got {p_mm}")
    if p == 0.0:
        return AmoneRoot(1.0, False)
    if p == 1.0:
        return AmoneRoot(0.0, True)
    lo, hi = 1e-300, 1.0
    # _condition(hi) = -p*ln(p/sqrt(1+p^2)) > 0 and the function decreases
    # without bound as S -> 0, so the bracket always holds.
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if _condition(mid, p) < 0.0:
            lo = mid
        else:
            hi = mid
    return AmoneRoot(0.5 * (lo + hi), False)


def solve_amone_grid(p_values):
    """Vectorized solve_amone over an array of p_mm values (S only)."""
    p = np.asarray(p_values, dtype=float)
    if np.any(~np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("p_mm values must lie in [0, 1]")
    lo = np.full(p.shape, 1e-300)
    hi = np.ones(p.shape)
    interior = (p > 0.0) & (p < 1.0)
    pi = p[interior]
    li, hi_i = lo[interior], hi[interior]
    while (hi_i - li).max(initial=0.0) > BISECT_TOL:
        mid = 0.5 * (li + hi_i)
        below = _condition(mid, pi) < 0.0
        li = np.where(below, mid, li)
        hi_i = np.where(below, hi_i, mid)
    S = np.ones(p.shape)
    S[interior] = 0.5 * (li + hi_i)
    S[p == 1.0] = 0.0
    return S


def amone_residual(S, W):
    """|S ln S - W ln(W / sqrt(1 + W^2))|, with the x ln x -> 0 limits at 0."""
    S = np.asarray(S, dtype=float)
    W = np.asarray(W, dtype=float)
    lhs = np.where(S > 0, S * np.log(np.where(S > 0, S, 1.0)), 0.0)
    rhs = np.where(W > 0, W * (np.log(np.where(W > 0, W, 1.0))
                               - 0.5 * np.log1p(W * W)), 0.0)
    out = np.abs(lhs - rhs)
    return float(out) if out.ndim == 0 else out


def amone_sweep(n=2001):
    """Tabulate (p_mm, S, W, |f_mm|) on a uniform p_mm grid.

    |f_mm| = S*sqrt(1+W^2)/W diverges as p_mm -> 0; the first row carries inf.
    """
    p = np.linspace(0.0, 1.0, n)
    S = solve_amone_grid(p)
    W = p * S
    with np.errstate(divide="ignore", invalid="ignore"):
        fmm = np.where(W > 0, S * np.sqrt(1.0 + W * W) / np.where(W > 0, W, 1.0), np.inf)
    return p, S, W, fmm


# ---------------------------------------------------------------------------
# jump tables

@dataclass(frozen=True)
class JumpColumn:
    """Jump data for one source basis state.

    factors[l] is NaN wherever it is undefined (zero-probability targets and
    the self-target of a growth-compensated column); the samplers can never
    select those entries.
    """
    m: int
    rate: float              # r_m, inverse time; 0 for inactive and folded columns
    probs: np.ndarray        # p(l|m), sums to 1 when rate > 0
    factors: np.ndarray      # f[l, m], complex
    S: float                 # AMONE normalization, in (0, 1]
    W: float                 # dimensionless weight, p_mm * S
    p_mm: float
    diagonal_folded: bool    # V[m,m] carried by the free phase, rate forced to 0
    growth_rate: float       # deterministic amplitude growth between jumps


@dataclass(frozen=True)
class JumpTable:
    """Per-column jump data plus packed arrays for the ensemble engine.

    Immutable; safe for unsynchronized concurrent reads by all workers.
    """
    model: object
    columns: tuple
    rates: np.ndarray        # (dim,)
    probs: np.ndarray        # (dim, dim), probs[l, m] = p(l|m)
    cum_probs: np.ndarray    # column-wise inclusive cumulative of probs, last row 1
    factors: np.ndarray      # (dim, dim), factors[l, m] = f[l, m], NaN where undefined
    growth: np.ndarray       # (dim,)
    energy_eff: np.ndarray   # (dim,), E_m plus folded V[m,m]
    folded: np.ndarray       # (dim,) bool

    @property
    def dim(self):
        return self.model.dim

    @property
    def hbar(self):
        return self.model.hbar

    @property
    def drift(self):
        """Complex per-state drift: amplitude factor exp(drift * dt) between jumps."""
        return -1j * self.energy_eff / self.hbar + self.growth


def build_jump_table(model):
    """Construct the unique jump process for a validated model."""
    dim = model.dim
    V = model.interaction
    hbar = model.hbar
    colsum = np.abs(V).sum(axis=0)

    rates = np.zeros(dim)
    probs = np.zeros((dim, dim))
    factors = np.full((dim, dim), np.nan + 0j, dtype=complex)
    growth = np.zeros(dim)
    energy_eff = model.free_energies.astype(float).copy()
    folded = np.zeros(dim, dtype=bool)
    columns = []

    for m in range(dim):
        if colsum[m] == 0.0:
            # Free column: no interaction, no jumps.
            columns.append(JumpColumn(m, 0.0, _readonly(np.zeros(dim)),
                                      _readonly(factors[:, m].copy()),
                                      1.0, 0.0, 0.0, False, 0.0))
            continue
        p = np.abs(V[:, m]) / colsum[m]
        p_mm = float(p[m])
        if p_mm == 1.0:
            # Purely diagonal column: fold V[m,m] into the free phase.
            folded[m] = True
            energy_eff[m] += V[m, m].real
            columns.append(JumpColumn(m, 0.0, _readonly(np.zeros(dim)),
                                      _readonly(factors[:, m].copy()),
                                      0.0, 0.0, 1.0, True, 0.0))
            continue
        root = solve_amone(p_mm)
        S = root.S
        W = p_mm * S
        r = colsum[m] / (hbar * S)
        rates[m] = r
        probs[:, m] = p
        col_f = np.full(dim, np.nan + 0j, dtype=complex)
        off = (np.arange(dim) != m) & (p > 0)
        col_f[off] = -1j * (V[off, m] / np.abs(V[off, m])) * S
        g = 0.0
        if V[m, m] != 0:
            col_f[m] = S * (hbar * r - 1j * V[m, m]) / abs(V[m, m])
        else:
            # Vanishing diagonal: deterministic growth replaces the
            # zero-probability self-jump channel (see module docstring).
            g = r
            growth[m] = r
        factors[:, m] = col_f
        columns.append(JumpColumn(m, float(r), _readonly(p.copy()), _readonly(col_f),
                                  float(S), float(W), p_mm, False, float(g)))

    cum = np.cumsum(probs, axis=0)
    cum[-1, :] = 1.0  # guard against rounding in the last cell
    return JumpTable(
        model=model,
        columns=tuple(columns),
        rates=_readonly(rates),
        probs=_readonly(probs),
        cum_probs=_readonly(cum),
        factors=_readonly(factors),
        growth=_readonly(growth),
        energy_eff=_readonly(energy_eff),
        folded=_readonly(folded),
    )


def effective_generator(table):
    """Single-process mean generator G: d/dt E[c * 1(m=l)] = sum_m G[l,m] ...

    Collects the jump gain/loss terms, the deterministic growth of
    compensated columns, and the folded diagonal phases. For a correctly
    built table, i*hbar*G equals the interaction matrix exactly.
    """
    dim = table.dim
    G = np.zeros((dim, dim), dtype=complex)
    for m in range(dim):
        r = table.rates[m]
        if r > 0:
            p = table.probs[:, m]
            f = np.where(p > 0, np.nan_to_num(table.factors[:, m]), 0.0)
            G[:, m] += r * p * f
            G[m, m] -= r
            G[m, m] += table.growth[m]
        if table.folded[m]:
            G[m, m] += -1j * (table.energy_eff[m] - table.model.free_energies[m]) / table.hbar
    return G


def verify_generator(table):
    """Max residual of the matching condition over all (l, m).

    Returns max |i*hbar*G[l,m] - V[l,m]|; below 1e-12 * max|V| for any table
    produced by build_jump_table (the identity is exact algebraically).
    """
    G = effective_generator(table)
    return float(np.abs(1j * table.hbar * G - table.model.interaction).max())
