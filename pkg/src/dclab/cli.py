"""``dclab`` command line: run checks and emit a JSON report.

Report schema (version "1")::

    {
      "version": "1",
      "tool_version": "...",
      "command": "<subcommand>",
      "config": {...resolved flags...},
      "seed": <int>,
      "checks": [{"name", "criterion", "predicted", "observed",
                  "tolerance", "verdict": "pass"|"fail", "details"}, ...],
      "timing": {"<check name>": {"seconds": ...}, "total_seconds": ...}
    }

Everything outside ``timing`` is a pure function of the argv. Exit status is
0 when every check passes, 1 when any fails, and 2 on usage errors.

Collision subcommands put per-|T| cells under ``details.cells``; each cell has
``T, n, empirical, standard_error, predicted, kind, formula, exact_min,
exact_max, exact_ok, sample_ok, verdict``.

Basis export (``verify-basis --export-basis PATH``, schema "dclab.basis/1")::

    {"schema", "N", "k", "family", "which", "note", "frame",
     "entries": [{"l": [..], "p": int, "m": int,
                  "support": [{"b": [..], "re": float, "im": float}, ...]}]}

Each entry is ``sum_b amp_b |b>|chi_l>`` where ``|chi_l>`` is the Fourier
state of the integer registers. ``t-stats --csv PATH`` writes the histogram
of ``|T| - 1`` as ``t_minus_1,count`` rows.

Per-trial randomness comes from ``numpy.random.SeedSequence([seed, *stream])``
so a trial's draws do not depend on scheduling or ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .basis import coset_span_check, enumerate_basis, verify_coset_orthogonality
from .core import DihedralParams, ResourceLimitError, derive_rng
from .experiments import (
    UNITARY_FAMILIES,
    ExperimentConfig,
    chebyshev_tail_check,
    collision_success_experiment,
    dcsp_confusion,
    t_statistics,
)
from .simulator import CosetOracle, DcspParams, dcp_solve
from .suite import CHECKS, exact_dcp_recovery, run_suite

REPORT_VERSION = "1"


def _check(name, predicted, observed, tolerance, verdict, **details) -> dict:
    return {
        "name": name,
        "criterion": None,
        "predicted": predicted,
        "observed": observed,
        "tolerance": tolerance,
        "verdict": "pass" if verdict else "fail",
        "details": details,
    }


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def cmd_verify_basis(args) -> tuple[list[dict], dict]:
    params = DihedralParams(args.N, args.k)
    (basis, t_build) = _timed(lambda: enumerate_basis(params))
    V = basis.dense_matrix()
    import numpy as np

    gram = float(np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1]))))
    orth, t_orth = _timed(lambda: verify_coset_orthogonality(params, basis))
    span, t_span = _timed(lambda: coset_span_check(params, basis))
    if args.export_basis:
        Path(args.export_basis).write_text(json.dumps(basis.to_json(), indent=1, sort_keys=True))
    checks = [
        _check("basis-orthonormality", {"entries": params.full_dim, "gram_max_dev": 0.0},
               {"entries": len(basis), "gram_max_dev": gram}, args.tol,
               len(basis) == params.full_dim and gram <= args.tol, n_b0=len(basis.B0), n_bperp=len(basis.Bperp)),
        _check("coset-orthogonality", 0.0, orth["max_abs_inner_product"], args.tol,
               orth["max_abs_inner_product"] <= args.tol, **orth),
        _check("coset-span", {"rank": span["n_b0"], "residual": 0.0},
               {"rank": span["rank"], "residual": span["max_coset_residual"]}, args.tol,
               span["rank"] == span["n_b0"] and span["max_coset_residual"] <= args.tol
               and span["max_bperp_projection"] <= args.tol, **span),
    ]
    return checks, {"basis": t_build, "coset-orthogonality": t_orth, "coset-span": t_span}


def _collision(algorithm):
    def run(args):
        config = ExperimentConfig(args.N, args.k, args.trials, args.seed, algorithm, args.unitary,
                                  sigmas=args.sigmas, threads=args.threads)
        summary, secs = _timed(lambda: collision_success_experiment(config))
        rec = _check(summary.name, summary.predicted, summary.empirical_rate,
                     f"{config.sigmas} sigma per |T| cell; exact 1e-12", summary.verdict,
                     standard_error=summary.standard_error, trials=summary.trials,
                     cells=summary.cells, notes=summary.notes)
        return [rec], {summary.name: secs}

    return run


def cmd_dcsp(args):
    dcsp = DcspParams.for_modulus(args.N, args.kprime)
    conf, secs = _timed(lambda: dcsp_confusion(dcsp, args.trials, derive_rng(args.seed, 0)))
    checks = [
        _check("dcsp-coset-inputs", 1.0, 1.0 - conf["coset_in_c_max_deviation"], 1e-10,
               conf["coset_in_c_max_deviation"] <= 1e-10),
        _check("dcsp-standard-inputs", conf["exact_standard_in_c"], conf["empirical_standard_in_c"], "3 sigma",
               conf["within_3_sigma"] and conf["exact_standard_in_c"] <= conf["bound"], **conf),
    ]
    return checks, {"dcsp": secs}


def cmd_dcp_demo(args):
    dcsp = DcspParams.for_modulus(args.N, args.kprime)
    b0 = enumerate_basis(dcsp.params, "B0")

    def go():
        runs = []
        for r in range(args.runs):
            rng = derive_rng(args.seed, r)
            d = int(rng.integers(args.N)) if args.d is None else args.d
            res = dcp_solve(CosetOracle(d, args.N, rng), dcsp, args.repeats, rng, b0)
            runs.append({"d": d, "d_hat": res.d_hat, "states_used": res.states_used, "votes": res.votes})
        return runs

    runs, secs = _timed(go)
    recovered = sum(run["d"] == run["d_hat"] for run in runs)
    details = {"runs": runs, "repeats": args.repeats}
    if args.repeats % 2 == 1:
        details["exact_recovery_probability"] = exact_dcp_recovery(args.N, len(b0) / dcsp.params.full_dim,
                                                                   args.repeats)
    rate = recovered / args.runs
    return [_check("dcp-reduction", args.min_rate, rate, args.min_rate, rate >= args.min_rate, **details)], {
        "dcp-demo": secs}


def cmd_t_stats(args):
    b = None if args.b is None else tuple(int(c) for c in args.b)
    rng = derive_rng(args.seed, 0) if args.mode == "sampled" else None
    stats, secs = _timed(lambda: t_statistics(args.k, args.N, b, args.mode, rng, args.samples))
    checks = []
    if args.mode == "exhaustive":
        ok = (abs(stats["mean"] - stats["predicted_mean"]) <= 1e-9
              and abs(stats["variance"] - stats["predicted_variance"]) <= 1e-9)
        checks.append(_check("t-statistics", {"mean": stats["predicted_mean"], "variance": stats["predicted_variance"]},
                             {"mean": stats["mean"], "variance": stats["variance"]}, 1e-9, ok, **stats))
        cheb = chebyshev_tail_check(args.k, args.N, args.t, b)
        checks.append(_check("chebyshev-tail", "tail <= Var/t^2", cheb["rows"], None, cheb["ok"]))
    else:
        se = (stats["predicted_variance"] / stats["population"]) ** 0.5
        ok = abs(stats["mean"] - stats["predicted_mean"]) <= args.sigmas * se
        checks.append(_check("t-statistics", stats["predicted_mean"], stats["mean"], f"{args.sigmas} sigma", ok,
                             **stats))
    if args.csv:
        with open(args.csv, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["t_minus_1", "count"])
            for v, c in stats["histogram"].items():
                writer.writerow([v, c])
    return checks, {"t-stats": secs}


def cmd_report_all(args):
    checks, timing = run_suite(args.seed, args.only)
    return checks, timing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dclab",
        description="Subset-sum basis and collision-finding checks for the dihedral coset space problem.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, seed=7):
        p.add_argument("--seed", type=int, default=seed, help=f"master seed (default {seed})")
        p.add_argument("--out", type=str, default=None, help="write the JSON report here (default: stdout)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker cap for trial loops; results do not depend on it (default: CPU count)")

    p = sub.add_parser("verify-basis", help="orthonormality, coset orthogonality and coset span")
    p.add_argument("--N", type=int, default=3, help="modulus (default 3)")
    p.add_argument("--k", type=int, default=2, help="register count (default 2)")
    p.add_argument("--tol", type=float, default=1e-10, help="absolute tolerance (default 1e-10)")
    p.add_argument("--export-basis", type=str, default=None, help="also write the basis as JSON to this path")
    common(p)
    p.set_defaults(func=cmd_verify_basis)

    for name, algorithm in (("alg1", "alg1"), ("alg2", "alg2")):
        p = sub.add_parser(name, help=f"collision experiment with {'U_S' if name == 'alg1' else 'U_C'}")
        p.add_argument("--N", type=int, default=4, help="modulus (default 4)")
        p.add_argument("--k", type=int, default=4, help="register count (default 4)")
        p.add_argument("--unitary", choices=UNITARY_FAMILIES, default="canonical",
                       help="basis/assignment family (default canonical)")
        p.add_argument("--trials", type=int, default=10_000, help="random (l, b) trials (default 10000)")
        p.add_argument("--sigmas", type=float, default=3.0, help="acceptance width in sigmas (default 3)")
        common(p)
        p.set_defaults(func=_collision(algorithm))

    p = sub.add_parser("dcsp", help="coset-space measurement confusion rates")
    p.add_argument("--N", type=int, default=4, help="modulus (default 4)")
    p.add_argument("--kprime", type=int, default=1, help="register slack k' (default 1)")
    p.add_argument("--trials", type=int, default=2000, help="sampled inputs (default 2000)")
    common(p)
    p.set_defaults(func=cmd_dcsp)

    p = sub.add_parser("dcp-demo", help="recover d bit by bit through coset-space measurements")
    p.add_argument("--N", type=int, default=4, help="modulus, a power of 2 (default 4)")
    p.add_argument("--kprime", type=int, default=1, help="register slack k' (default 1)")
    p.add_argument("--repeats", type=int, default=5, help="majority repetitions per bit (default 5)")
    p.add_argument("--runs", type=int, default=20, help="independent runs (default 20)")
    p.add_argument("--d", type=int, default=None, help="fixed hidden d (default: uniform per run)")
    p.add_argument("--min-rate", type=float, default=0.9, help="required recovery rate (default 0.9)")
    common(p)
    p.set_defaults(func=cmd_dcp_demo)

    p = sub.add_parser("t-stats", help="statistics of |T|-1 over random l for fixed b")
    p.add_argument("--N", type=int, default=4, help="modulus (default 4)")
    p.add_argument("--k", type=int, default=3, help="register count (default 3)")
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive",
                   help="population or Monte Carlo (default exhaustive)")
    p.add_argument("--b", type=str, default=None, help="fixed bit string such as 101 (default all ones)")
    p.add_argument("--samples", type=int, default=100_000, help="draws in sampled mode (default 100000)")
    p.add_argument("--t", type=float, nargs="+", default=[1, 2, 5, 10],
                   help="Chebyshev thresholds (default 1 2 5 10)")
    p.add_argument("--sigmas", type=float, default=3.0, help="sampled-mode width in sigmas (default 3)")
    p.add_argument("--csv", type=str, default=None, help="write the histogram as CSV here")
    common(p)
    p.set_defaults(func=cmd_t_stats)

    p = sub.add_parser("report-all", help="run the full acceptance suite")
    p.add_argument("--only", nargs="+", choices=list(CHECKS), default=None, help="run a subset of checks")
    common(p)
    p.set_defaults(func=cmd_report_all)
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "threads")}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if getattr(args, "b", None) is not None and set(args.b) - {"0", "1"}:
        parser.print_usage(sys.stderr)
        print("dclab: error: --b must be a bit string", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        checks, timing = args.func(args)
    except (ValueError, ResourceLimitError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dclab: error: {exc}", file=sys.stderr)
        return 2
    timing = {k: v if isinstance(v, dict) else {"seconds": v} for k, v in timing.items()}
    timing["total_seconds"] = time.perf_counter() - start
    report = {
        "version": REPORT_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "config": _config(args),
        "seed": args.seed,
        "checks": checks,
        "timing": timing,
    }
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(c["verdict"] == "pass" for c in checks) else 1


def main() -> None:
    sys.exit(run())
