"""Figure rendering for the CLI report paths.

Each writer takes the data already destined for CSV and renders a PNG next
to it. Uses the Agg backend; PNG metadata is pinned so repeated runs produce
identical bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"metadata": {"Software": "braketsim"}}


def _save(fig, path):
    fig.savefig(path, dpi=120, **_META)
    plt.close(fig)


def save_amone_figure(path, p, S, W, fmm):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    s_grid = np.linspace(1e-6, 1.0, 400)
    ax1.plot(s_grid, s_grid * np.log(s_grid), label="S ln S")
    ax1.plot(s_grid, s_grid * np.log(s_grid / np.sqrt(1 + s_grid ** 2)),
             "--", label="W ln(W/sqrt(1+W^2))")
    ax1.set_xlabel("S or W")
    ax1.legend(frameon=False)
    ax1.set_title("normalization condition")
    ax2.plot(p, S, label="S")
    ax2.plot(p, W, label="W")
    ax2.set_xlabel("p_mm")
    ax2.set_ylim(0, 1.05)
    ax2.legend(frameon=False)
    ax2.set_title("solution vs self-jump probability")
    fig.tight_layout()
    _save(fig, path)


def save_profile_figure(path, x, columns, stderr=None, title="double-slit intensity"):
    """columns: mapping label -> intensity array; stderr optional mapping."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, y in columns.items():
        if stderr and label in stderr:
            ax.errorbar(x, y, yerr=stderr[label], fmt=".", ms=3, lw=0.8, label=label)
        else:
            ax.plot(x, y, label=label)
    ax.set_xlabel("position on absorbing wall")
    ax.set_ylabel("intensity (unnormalized)")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def save_epr_figure(path, rows):
    """rows: (theta, kind, exact, mc_mean, mc_stderr) tuples."""
    fig, ax = plt.subplots(figsize=(7, 4))
    kinds = sorted({r[1] for r in rows})
    thetas = np.linspace(min(r[0] for r in rows), max(r[0] for r in rows), 200)
    for kind in kinds:
        pts = [(r[0], r[2], r[3], r[4]) for r in rows if r[1] == kind]
        pts.sort()
        th = [p[0] for p in pts]
        ax.errorbar(th, [p[2] for p in pts], yerr=[p[3] for p in pts],
                    fmt="o", ms=4, label=f"{kind} (MC)")
    if len({r[0] for r in rows}) > 1:
        ax.plot(thetas, 0.5 * np.sin(thetas) ** 2, "k-", lw=0.8)
        ax.plot(thetas, 0.5 * np.cos(thetas) ** 2, "k--", lw=0.8)
    ax.set_xlabel("theta1 + theta2")
    ax.set_ylabel("coincidence probability")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_density_figure(path, estimate, title="density estimate"):
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.6))
    for ax, part, data in ((axes[0], "Re", estimate.mean.real),
                           (axes[1], "Im", estimate.mean.imag)):
        im = ax.imshow(data, cmap="RdBu_r",
                       vmin=-np.abs(estimate.mean).max(),
                       vmax=np.abs(estimate.mean).max())
        ax.set_title(f"{part} mean")
        ax.set_xlabel("m")
        ax.set_ylabel("l")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)


def save_compare_figure(path, report):
    zs = np.concatenate([report.z_re.reshape(-1), report.z_im.reshape(-1),
                         [report.trace_z]])
    fig, ax = plt.subplots(figsize=(7, 3.6))
    ax.axhspan(-5, 5, color="0.9")
    ax.plot(zs, "o", ms=4)
    ax.set_xlabel("entry (re/im interleaved, trace last)")
    ax.set_ylabel("z-score vs exact")
    ax.set_title(f"t = {report.time}, N = {report.pairs}, max |z| = {report.max_abs_z:.2f}")
    fig.tight_layout()
    _save(fig, path)


def save_convergence_figure(path, report):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.asarray(report.ladder, dtype=float)
    ax.loglog(n, report.errors, "o-", label="error")
    if not report.exact_case:
        fit = 10 ** (np.polyval(np.polyfit(np.log10(n), np.log10(report.errors), 1),
                                np.log10(n)))
        ax.loglog(n, fit, "--", label=f"slope {report.slope:.3f}")
        ax.loglog(n, report.errors[0] * (n / n[0]) ** -0.5, ":", label="slope -1/2")
    ax.set_xlabel("trajectory pairs")
    ax.set_ylabel("Frobenius error vs exact")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
