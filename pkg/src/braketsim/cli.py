"""Command-line front end.

Subcommands: amone-table, evolve, epr, doubleslit, compare-exact. Every
stochastic command takes --seed and --trajectories and writes CSV that is a
deterministic function of (config, seed), independent of --threads. With
--plot, a PNG is rendered next to each CSV.

Exit codes: 0 success, 2 validation or usage error, 3 statistical check
failure, 4 I/O failure.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .amone import amone_sweep, build_jump_table, verify_generator
from .doubleslit import (enumerate_paths, intensity_profile, load_geometry,
                         mc_profile)
from .engine import estimate_density, sampler_from_amplitudes
from .epr import (KINDS, chsh_mc, chsh_value, epr_exact_probability,
                  epr_mc_probability)
from .model import load_model
from .report import (COMPARE_HEADER, CONVERGENCE_HEADER, DENSITY_HEADER,
                     SLOPE_BAND, Z_LIMIT, StatisticalFailure, compare_exact,
                     convergence, density_rows, write_csv)
from .streams import derive_seed

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STATISTICAL = 3
EXIT_IO = 4

THREADS_ENV = "BRAKETSIM_THREADS"


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _png_path(out):
    stem, _dot, _ext = out.rpartition(".")
    return (stem or out) + ".png"


def load_sampler(path):
    """Initial-state file: {"amplitudes": [[re, im], ...], "weights": [...]?}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        amps = np.array([complex(e[0], e[1]) if isinstance(e, (list, tuple))
                         else complex(e) for e in raw["amplitudes"]])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"initial-state file is malformed: {exc}") from exc
    weights = raw.get("weights")
    return sampler_from_amplitudes(amps, None if weights is None else np.asarray(weights, float))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="braketsim",
        description="Two-process jump unraveling of the von Neumann equation: "
                    "jump tables, ensemble evolution, EPR and double-slit experiments.",
    )
    parser.add_argument("--version", action="version", version=f"braketsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, trajectories=True):
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--plot", action="store_true",
                       help="also render a PNG next to the CSV")
        if trajectories:
            p.add_argument("--trajectories", "-n", type=int, default=100_000,
                           help="number of bra-ket trajectory pairs (>= 2)")
            p.add_argument("--seed", type=int, default=0, help="master seed")
            p.add_argument("--threads", type=int, default=None,
                           help=f"worker threads (default ${THREADS_ENV} or 1); "
                                "results are independent of this value")

    p = sub.add_parser("amone-table",
                       help="jump-process parameters of a model, or a normalization sweep")
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--sweep", type=int, metavar="N",
                   help="emit (p_mm, S, W, |f_mm|) on an N-point grid instead")
    add_common(p, trajectories=False)

    p = sub.add_parser("evolve", help="ensemble density-matrix estimate at a fixed time")
    p.add_argument("--model", required=True)
    p.add_argument("--initial", required=True, help="initial-state JSON file")
    p.add_argument("--time", type=float, required=True)
    add_common(p)

    p = sub.add_parser("epr", help="EPR coincidence probabilities and CHSH values")
    p.add_argument("--theta1", type=float, action="append", default=None,
                   help="first polarizer angle in radians (repeatable)")
    p.add_argument("--theta2", type=float, action="append", default=None,
                   help="second polarizer angle in radians (repeatable)")
    p.add_argument("--z-limit", type=float, default=Z_LIMIT,
                   help="acceptance band, in standard errors, for the built-in "
                        "exact-vs-MC checks")
    p.add_argument("--chsh", type=float, nargs=4, metavar=("A", "AP", "B", "BP"),
                   default=None,
                   help="compute the CHSH value at four polarizer angles "
                        "(the canonical maximizing set is 0, pi/4, -pi/8, -3pi/8)")
    add_common(p)

    p = sub.add_parser("doubleslit", help="double-slit intensity profiles")
    p.add_argument("--geometry", required=True, help="geometry JSON file")
    p.add_argument("--mode", choices=("closed", "pairs", "mc"), default="closed")
    p.add_argument("--slits", choices=("I", "II", "both"), default=None,
                   help="restrict output to one configuration (default: all three)")
    add_common(p)

    p = sub.add_parser("compare-exact",
                       help="ensemble estimate vs the exact integrator, with z-scores")
    p.add_argument("--model", required=True)
    p.add_argument("--initial", required=True)
    p.add_argument("--time", type=float, action="append", required=True,
                   help="comparison time (repeatable)")
    p.add_argument("--ladder", type=int, nargs="+", default=None,
                   help="convergence mode: ensemble sizes for the error ladder")
    p.add_argument("--z-limit", type=float, default=Z_LIMIT,
                   help="acceptance band, in standard errors, for the z-score gate")
    add_common(p)
    return parser


# ---------------------------------------------------------------------------
# subcommand bodies

def run_amone_table(args):
    if (args.sweep is None) == (args.model is None):
        raise ValueError("amone-table needs exactly one of --model or --sweep")
    if args.sweep is not None:
        if args.sweep < 2:
            raise ValueError("--sweep needs at least 2 grid points")
        p, S, W, fmm = amone_sweep(args.sweep)
        write_csv(args.out, ("p_mm", "S", "W", "abs_f_mm"), list(zip(p, S, W, fmm)))
        if args.plot:
            from .plots import save_amone_figure
            save_amone_figure(_png_path(args.out), p, S, W, fmm)
        return EXIT_OK
    model = load_model(args.model)
    table = build_jump_table(model)
    residual = verify_generator(table)
    header = ("row", "m", "l", "rate", "S", "W", "p_mm", "diagonal_folded",
              "p_lm", "re_f_lm", "im_f_lm")
    rows = []
    for col in table.columns:
        rows.append(("column", col.m, "", col.rate, col.S, col.W, col.p_mm,
                     col.diagonal_folded, "", "", ""))
        for l in range(model.dim):
            if col.probs[l] > 0:
                f = col.factors[l]
                rows.append(("target", col.m, l, "", "", "", "", "",
                             col.probs[l], f.real, f.imag))
    write_csv(args.out, header, rows)
    print(f"generator residual: {residual:.3e} "
          f"(limit {1e-12 * max(np.abs(model.interaction).max(), 1.0):.3e})")
    return EXIT_OK


def run_evolve(args):
    model = load_model(args.model)
    sampler = load_sampler(args.initial)
    table = build_jump_table(model)
    est = estimate_density(sampler, table, args.time, args.trajectories,
                           args.seed, threads=args.threads)
    write_csv(args.out, DENSITY_HEADER, density_rows(est))
    print(f"trace = {est.trace_mean.real:.6f} +- {est.trace_stderr:.6f} "
          f"({est.count} pairs)")
    if args.plot:
        from .plots import save_density_figure
        save_density_figure(_png_path(args.out), est,
                            title=f"t = {args.time}, N = {est.count}")
    return EXIT_OK


def run_epr(args):
    if args.chsh is not None:
        a, ap, b, bp = args.chsh
        exact = chsh_value(a, ap, b, bp)
        mc, stderr = chsh_mc(a, ap, b, bp, args.trajectories, args.seed,
                             threads=args.threads)
        print(f"CHSH exact = {exact:.6f}")
        print(f"CHSH MC    = {mc:.6f} +- {stderr:.6f}  (N = {args.trajectories} per setting)")
        write_csv(args.out, ("name", "value"),
                  [("chsh_exact", exact), ("chsh_mc", mc), ("chsh_mc_stderr", stderr)])
        z = abs(mc - exact) / stderr if stderr > 0 else 0.0
        if z >= args.z_limit:
            raise StatisticalFailure(
                f"CHSH estimate off by {z:.1f} standard errors (seed {args.seed})")
        return EXIT_OK
    theta1 = args.theta1 if args.theta1 is not None else [0.0]
    theta2 = args.theta2 if args.theta2 is not None else [0.0]
    rows = []
    failures = []
    for i, t1 in enumerate(theta1):
        for j, t2 in enumerate(theta2):
            for k, kind in enumerate(KINDS):
                exact = epr_exact_probability(kind, t1, t2)
                est = epr_mc_probability(kind, t1, t2, args.trajectories,
                                         derive_seed(args.seed, 7002, i, j, k),
                                         threads=args.threads)
                rows.append((t1 + t2, kind, exact, est.mean, est.stderr))
                z = abs(est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
                if z >= args.z_limit:
                    failures.append(f"kind {kind} at theta = {t1 + t2}: z = {z:.1f}")
    write_csv(args.out, ("theta", "kind", "exact", "mc_mean", "mc_stderr"), rows)
    if args.plot:
        from .plots import save_epr_figure
        save_epr_figure(_png_path(args.out), rows)
    if failures:
        raise StatisticalFailure("; ".join(failures) + f" (seed {args.seed})")
    return EXIT_OK


def run_doubleslit(args):
    geom = load_geometry(args.geometry)
    x = np.asarray(geom.bin_centers, dtype=float)
    configs = (args.slits,) if args.slits else ("I", "II", "both")
    labels = {c: f"P_{c}" for c in configs}
    if args.mode in ("closed", "pairs"):
        prof = intensity_profile(geom, pair_sums=(args.mode == "pairs"))
        cols = {"I": prof.P_I, "II": prof.P_II, "both": prof.P_both}
        header = ["x"] + [labels[c] for c in configs]
        rows = list(zip(x, *[cols[c] for c in configs]))
        write_csv(args.out, header, rows)
        if args.plot:
            from .plots import save_profile_figure
            save_profile_figure(_png_path(args.out), x,
                                {labels[c]: cols[c] for c in configs})
        return EXIT_OK
    paths = enumerate_paths(geom if geom.slits_open == "both" else
                            replace(geom, slits_open="both"))
    result = mc_profile(paths, args.trajectories, args.seed, slits=configs)
    header = ["x"]
    series = []
    for c in configs:
        header += [labels[c], f"{labels[c]}_stderr"]
        series += [result[c][0], result[c][1]]
    write_csv(args.out, header, list(zip(x, *series)))
    if args.plot:
        from .plots import save_profile_figure
        save_profile_figure(_png_path(args.out), x,
                            {labels[c]: result[c][0] for c in configs},
                            stderr={labels[c]: result[c][1] for c in configs},
                            title=f"double-slit MC, N = {args.trajectories}")
    return EXIT_OK


def run_compare_exact(args):
    model = load_model(args.model)
    sampler = load_sampler(args.initial)
    table = build_jump_table(model)
    if args.ladder is not None:
        if len(args.time) != 1:
            raise ValueError("convergence mode takes exactly one --time")
        if min(args.ladder) < 2:
            raise ValueError("ladder entries must be >= 2")
        rep = convergence(model, table, sampler, args.time[0], args.ladder,
                          args.seed, threads=args.threads)
        write_csv(args.out, CONVERGENCE_HEADER, rep.rows())
        if args.plot:
            from .plots import save_convergence_figure
            save_convergence_figure(_png_path(args.out), rep)
        if rep.exact_case:
            print("errors at rounding level: exact case, no slope to fit")
            return EXIT_OK
        print(f"fitted log-log slope = {rep.slope:.4f} (expected about -0.5)")
        if not (SLOPE_BAND[0] <= rep.slope <= SLOPE_BAND[1]):
            raise StatisticalFailure(
                f"convergence slope {rep.slope:.4f} outside {SLOPE_BAND} (seed {args.seed})")
        return EXIT_OK
    all_rows = []
    failures = []
    for i, t in enumerate(args.time):
        rep = compare_exact(model, table, sampler, t, args.trajectories,
                            derive_seed(args.seed, 7003, i), threads=args.threads)
        all_rows.extend((t,) + row for row in rep.rows())
        ok = rep.max_abs_z < args.z_limit
        status = "pass" if ok else "FAIL"
        print(f"t = {t}: max |z| = {rep.max_abs_z:.2f} over "
              f"{2 * model.dim ** 2} entries + trace -> {status}")
        if not ok:
            l, m, z = rep.worst_entry()
            failures.append(f"t = {t}: entry ({l},{m}) z = {z:.2f} (seed {args.seed})")
        if args.plot:
            from .plots import save_compare_figure
            save_compare_figure(_png_path(args.out).replace(".png", f".t{i}.png"), rep)
    write_csv(args.out, ("time",) + COMPARE_HEADER, all_rows)
    if failures:
        raise StatisticalFailure("; ".join(failures))
    return EXIT_OK


RUNNERS = {
    "amone-table": run_amone_table,
    "evolve": run_evolve,
    "epr": run_epr,
    "doubleslit": run_doubleslit,
    "compare-exact": run_compare_exact,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = _default_threads()
    try:
        return RUNNERS[args.command](args)
    except StatisticalFailure as exc:
        print(f"statistical check failed: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
