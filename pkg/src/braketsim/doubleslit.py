"""Double-slit interference from momentum-pair path enumeration.

An electron leaves the gun with fixed |k|, collides elastically once at a
slit point, and flies to a detector bin on the absorbing wall, where an
inelastic collision stops it. Positions are known only at those three
collisions, so a path is the piecewise-linear polyline gun -> slit point ->
bin center. Its phase is exp(i k L) with L the total length (equivalent to
the flight-time phase at fixed |k|), gun-exit and collision factors are
taken as 1, and path probabilities are uniform over (open slit points x
bins).

A detector fires only when the two independent processes of a pair both end
in its bin, so the detection probability is the double sum

    sum_{j,l in D} p_j p_l phi_j conj(phi_l)  =  |sum_{j in D} p_j phi_j|^2,

an algebraic identity: the interference pattern arises multiplicatively from
independent pairs, not from adding amplitudes. `pair_sum_intensity` computes
the left side explicitly, `closed_form_intensity` the right side, and
`mc_intensity` samples the left side; intensities are unnormalized
throughout (source strength is not modeled).

Slit points are the midpoints of points_per_slit equal slices of each slit
(at least 2, the minimum that shows single-slit diffraction). Slit II points
are the exact negations of slit I points, so mirror symmetry holds bitwise.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple
import json

import numpy as np

from .streams import chunk_ranges, substream

_SLIT_CHOICES = ("I", "II", "both")


@dataclass(frozen=True)
class SlitGeometry:
    """Plane geometry with one transverse coordinate, lengths in one
    consistent unit. The gun exit sits on the axis at distance L1 from the
    slit wall; the absorber is L2 further."""
    L1: float
    L2: float
    slit_separation: float    # center-to-center distance d
    slit_width: float         # a
    points_per_slit: int
    bin_centers: np.ndarray
    bin_width: float
    wavenumber: float         # |k|
    slits_open: str = "both"

    def __post_init__(self):
        for name in ("L1", "L2", "slit_separation", "slit_width", "bin_width", "wavenumber"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.slit_separation <= self.slit_width:
            raise ValueError("slit separation must exceed slit width")
        if self.points_per_slit < 2:
            raise ValueError("need at least 2 points per slit")
        if self.slits_open not in _SLIT_CHOICES:
            raise ValueError(f"slits_open must be one of {_SLIT_CHOICES}")
        if np.asarray(self.bin_centers).size < 1:
            raise ValueError("need at least one detector bin")

    @property
    def n_bins(self):
        return int(np.asarray(self.bin_centers).size)


def wavenumber_from_energy(mass, energy):
    """|k| from k^2 = 2 m E (hbar = 1 units)."""
    if not (mass > 0 and energy > 0):
        raise ValueError("mass and energy must be positive")
    return float(np.sqrt(2.0 * mass * energy))


def make_geometry(L1, L2, slit_separation, slit_width, points_per_slit,
                  n_bins, bin_span, wavenumber=None, mass=None, energy=None,
                  slits_open="both"):
    """Build a geometry with n_bins equally spaced detector bins covering
    bin_span = (lo, hi). Give either wavenumber or (mass, energy)."""
    if wavenumber is None:
        wavenumber = wavenumber_from_energy(mass, energy)
    lo, hi = float(bin_span[0]), float(bin_span[1])
    if not (hi > lo and n_bins >= 1):
        raise ValueError("bin_span must be increasing and n_bins >= 1")
    centers = np.linspace(lo, hi, int(n_bins))
    width = (hi - lo) / (int(n_bins) - 1) if n_bins > 1 else hi - lo
    centers.setflags(write=False)
    return SlitGeometry(float(L1), float(L2), float(slit_separation),
                        float(slit_width), int(points_per_slit), centers,
                        float(width), float(wavenumber), slits_open)


def fraunhofer_geometry(slits_open="both", points_per_slit=16, n_bins=201):
    """Reference far-field geometry: wavelength 1, d = 100, a = 20,
    L1 = L2 = 1e4, fringe spacing 2*pi*L2/(k*d) = 100."""
    return make_geometry(L1=1e4, L2=1e4, slit_separation=100.0, slit_width=20.0,
                         points_per_slit=points_per_slit, n_bins=n_bins,
                         bin_span=(-300.0, 300.0), wavenumber=2.0 * np.pi,
                         slits_open=slits_open)


@dataclass(frozen=True)
class PathSpec:
    """One enumerated path: gun -> slit_point -> endpoint on the absorber."""
    slit_point: float
    endpoint: float
    bin_index: int
    slit: str            # "I" or "II"
    total_length: float
    prob: float
    phase: complex


@dataclass(frozen=True)
class PathSet:
    """All enumerated paths of a geometry, as parallel arrays."""
    geometry: SlitGeometry
    slit_point: np.ndarray
    endpoint: np.ndarray
    bin_index: np.ndarray
    slit_label: np.ndarray    # 0 for slit I, 1 for slit II
    total_length: np.ndarray
    prob: np.ndarray
    phase: np.ndarray

    def __len__(self):
        return int(self.prob.size)

    def spec(self, j):
        return PathSpec(
            slit_point=float(self.slit_point[j]),
            endpoint=float(self.endpoint[j]),
            bin_index=int(self.bin_index[j]),
            slit="I" if self.slit_label[j] == 0 else "II",
            total_length=float(self.total_length[j]),
            prob=float(self.prob[j]),
            phase=complex(self.phase[j]),
        )


def slit_points(geom):
    """(points_I, points_II): midpoints of points_per_slit equal slices, with
    slit II the exact mirror of slit I."""
    n = geom.points_per_slit
    a = geom.slit_width
    offsets = -a / 2 + (np.arange(n) + 0.5) * (a / n)
    pts_I = geom.slit_separation / 2 + offsets
    return pts_I, -pts_I


def enumerate_paths(geom):
    """Enumerate all (slit point, detector bin) paths for the open slits.

    One outgoing direction per bin center; probabilities uniform over the
    enumerated set (they sum to 1); phase = exp(i k L)."""
    pts_I, pts_II = slit_points(geom)
    if geom.slits_open == "I":
        pts, labels = pts_I, np.zeros(pts_I.size, dtype=np.int64)
    elif geom.slits_open == "II":
        pts, labels = pts_II, np.ones(pts_II.size, dtype=np.int64)
    else:
        pts = np.concatenate([pts_I, pts_II])
        labels = np.repeat(np.array([0, 1], dtype=np.int64), pts_I.size)
    xs = np.asarray(geom.bin_centers, dtype=float)

    S, X = np.meshgrid(pts, xs, indexing="ij")
    lengths = np.sqrt(geom.L1 ** 2 + S ** 2) + np.sqrt(geom.L2 ** 2 + (X - S) ** 2)
    n_paths = S.size
    arrays = dict(
        slit_point=S.reshape(-1),
        endpoint=X.reshape(-1),
        bin_index=np.tile(np.arange(xs.size, dtype=np.int64), pts.size),
        slit_label=np.repeat(labels, xs.size),
        total_length=lengths.reshape(-1),
        prob=np.full(n_paths, 1.0 / n_paths),
        phase=np.exp(1j * geom.wavenumber * lengths.reshape(-1)),
    )
    for v in arrays.values():
        v.setflags(write=False)
    return PathSet(geometry=geom, **arrays)


def detector_set(paths, bin_index, slit=None):
    """Indices of the paths ending in the given bin (optionally restricted
    to one slit: "I" or "II")."""
    mask = paths.bin_index == int(bin_index)
    if slit is not None:
        mask &= paths.slit_label == (0 if slit == "I" else 1)
    return np.flatnonzero(mask)


def closed_form_intensity(paths, bin_index, slit=None):
    """|sum_{j in D} p_j phi_j|^2 (unnormalized detection intensity)."""
    d = detector_set(paths, bin_index, slit)
    return float(np.abs(np.sum(paths.prob[d] * paths.phase[d])) ** 2)


def pair_sum_intensity(paths, bin_index, slit=None):
    """Explicit double sum over D x D of p_j p_l phi_j conj(phi_l).

    Real up to rounding (conjugate-symmetric sum); equals
    closed_form_intensity to rounding by |sum z|^2 = sum_jl z_j conj(z_l).
    """
    d = detector_set(paths, bin_index, slit)
    z = paths.prob[d] * paths.phase[d]
    total = complex(np.sum(np.outer(z, z.conj())))
    return total.real


class MCIntensity(NamedTuple):
    mean: float
    stderr: float
    imag_mean: float    # consistent with 0 by the j <-> l pairing symmetry
    imag_stderr: float


def mc_intensity(paths, bin_index, pairs, seed, slit=None):
    """Sample the double sum: draw two independent paths per pair from p and
    accumulate phi_j conj(phi_l) when both land in the bin (a contribution is
    recorded only once both processes have been absorbed).

    The imaginary accumulator is reported as a symmetry diagnostic: the
    j <-> l exchange makes its expectation exactly zero.
    """
    pairs = int(pairs)
    if pairs < 2:
        raise ValueError(f"need at least 2 pairs, got {pairs}")
    d = detector_set(paths, bin_index, slit)
    in_d = np.zeros(len(paths), dtype=bool)
    in_d[d] = True
    s1 = 0.0 + 0.0j
    s2r = 0.0
    s2i = 0.0
    cum = np.cumsum(paths.prob)
    cum[-1] = 1.0
    for cid, _start, count in chunk_ranges(pairs):
        gen = substream(seed, 9001, cid)
        j = _draw_paths(cum, gen, count)
        l = _draw_paths(cum, gen, count)
        hit = in_d[j] & in_d[l]
        v = paths.phase[j[hit]] * np.conj(paths.phase[l[hit]])
        s1 += v.sum()
        s2r += (v.real ** 2).sum()
        s2i += (v.imag ** 2).sum()
    mean = s1 / pairs
    var_re = max(s2r - pairs * mean.real ** 2, 0.0) / (pairs - 1)
    var_im = max(s2i - pairs * mean.imag ** 2, 0.0) / (pairs - 1)
    return MCIntensity(float(mean.real), float(np.sqrt(var_re / pairs)),
                       float(mean.imag), float(np.sqrt(var_im / pairs)))


def _draw_paths(cum, gen, count):
    u = 1.0 - gen.random(count)
    return np.searchsorted(cum, u, side="left")


def mc_profile(paths, pairs, seed, slits=("I", "II", "both")):
    """One sampling pass estimating the intensity of every bin for each
    requested slit restriction. Returns {slit: (mean array, stderr array)}.

    Restrictions reuse the same draws: the indicator for configuration "I"
    keeps only pairs with both trajectories through slit I, matching the
    enumeration with slit II blocked at the shared path weights.
    """
    pairs = int(pairs)
    if pairs < 2:
        raise ValueError(f"need at least 2 pairs, got {pairs}")
    n_bins = paths.geometry.n_bins
    cum = np.cumsum(paths.prob)
    cum[-1] = 1.0
    sums = {c: (np.zeros(n_bins, dtype=complex), np.zeros(n_bins)) for c in slits}
    for cid, _start, count in chunk_ranges(pairs):
        gen = substream(seed, 9001, cid)
        j = _draw_paths(cum, gen, count)
        l = _draw_paths(cum, gen, count)
        same_bin = paths.bin_index[j] == paths.bin_index[l]
        for config in slits:
            if config == "both":
                keep = same_bin
            else:
                lab = 0 if config == "I" else 1
                keep = same_bin & (paths.slit_label[j] == lab) & (paths.slit_label[l] == lab)
            v = paths.phase[j[keep]] * np.conj(paths.phase[l[keep]])
            b = paths.bin_index[j[keep]]
            s1, s2 = sums[config]
            np.add.at(s1, b, v)
            np.add.at(s2, b, v.real ** 2)
    out = {}
    for config in slits:
        s1, s2 = sums[config]
        mean = s1.real / pairs
        var = np.maximum(s2 - pairs * mean ** 2, 0.0) / (pairs - 1)
        out[config] = (mean, np.sqrt(var / pairs))
    return out


@dataclass(frozen=True)
class IntensityProfile:
    x: np.ndarray
    P_I: np.ndarray
    P_II: np.ndarray
    P_both: np.ndarray


def intensity_profile(geom, pair_sums=False):
    """Per-bin intensities for slit I only, slit II only, and both open.

    All three are computed from the both-open enumeration at its shared path
    weights: closing a slit removes its paths without reweighting the rest,
    so the three curves live on one intensity scale (and the central ratio
    P_both / (P_I + P_II) = 2 for a symmetric geometry). With pair_sums=True
    the explicit double sums are used instead of the closed form.
    """
    both = enumerate_paths(replace(geom, slits_open="both"))
    f = pair_sum_intensity if pair_sums else closed_form_intensity
    nb = geom.n_bins
    return IntensityProfile(
        x=np.asarray(geom.bin_centers, dtype=float),
        P_I=np.array([f(both, b, slit="I") for b in range(nb)]),
        P_II=np.array([f(both, b, slit="II") for b in range(nb)]),
        P_both=np.array([f(both, b) for b in range(nb)]),
    )


def theoretical_fringe_spacing(geom):
    """Small-angle two-slit fringe spacing 2*pi*L2 / (k*d)."""
    return 2.0 * np.pi * geom.L2 / (geom.wavenumber * geom.slit_separation)


def fringe_spacing(x, intensity, window=None):
    """Mean spacing of adjacent interior maxima of a sampled profile,
    optionally restricted to |x| <= window."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(intensity, dtype=float)
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    peaks = np.flatnonzero(inner) + 1
    if window is not None:
        peaks = peaks[np.abs(x[peaks]) <= window]
    if peaks.size < 2:
        raise ValueError("fewer than two maxima in the requested window")
    return float(np.mean(np.diff(x[peaks])))


# ---------------------------------------------------------------------------
# geometry files

def geometry_to_dict(geom):
    """File keys: L1, L2, d (separation), a (width), n_s (points per slit),
    k (wavenumber) or m_e + E, bins {count, span}, slits_open."""
    return {
        "L1": geom.L1,
        "L2": geom.L2,
        "d": geom.slit_separation,
        "a": geom.slit_width,
        "n_s": geom.points_per_slit,
        "bins": {"count": geom.n_bins,
                 "span": [float(geom.bin_centers[0]), float(geom.bin_centers[-1])]},
        "k": geom.wavenumber,
        "slits_open": geom.slits_open,
    }


def _pick(raw, *names):
    for name in names:
        if name in raw:
            return raw[name]
    raise KeyError(names[0])


def geometry_from_dict(raw):
    """Geometry from a mapping; momentum via `k` or `m_e` + `E`. Descriptive
    aliases (slit_separation, slit_width, points_per_slit, wavenumber) are
    accepted alongside the short file keys."""
    try:
        bins = raw["bins"]
        kwargs = dict(
            L1=float(raw["L1"]),
            L2=float(raw["L2"]),
            slit_separation=float(_pick(raw, "d", "slit_separation")),
            slit_width=float(_pick(raw, "a", "slit_width")),
            points_per_slit=int(_pick(raw, "n_s", "points_per_slit")),
            n_bins=int(bins["count"]),
            bin_span=(float(bins["span"][0]), float(bins["span"][1])),
            slits_open=raw.get("slits_open", "both"),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"geometry data is missing required keys: {exc}") from exc
    if "k" in raw or "wavenumber" in raw:
        kwargs["wavenumber"] = float(_pick(raw, "k", "wavenumber"))
    else:
        try:
            kwargs["mass"] = float(raw["m_e"])
            kwargs["energy"] = float(raw["E"])
        except (KeyError, TypeError) as exc:
            raise ValueError("geometry needs either k (wavenumber) or m_e and E") from exc
    return make_geometry(**kwargs)


def save_geometry(geom, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(geometry_to_dict(geom), fh, indent=2)
        fh.write("\n")


def load_geometry(path):
    with open(path, "r", encoding="utf-8") as fh:
        return geometry_from_dict(json.load(fh))
