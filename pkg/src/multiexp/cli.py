"""Command line entry point: ``multiexp <subcommand> --config file.json``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .allocation import BudgetProblem, allocate
from .bounds import bound_thm45, class_constants
from .errors import ConfigError, ConvergenceError
from .harness import emit_csv, run_sweep, simulate
from .plotting import emit_svg
from .rademacher import DEFAULT_DRAWS, estimate_linear_l1, estimate_linear_l2
from .synthetic import generate_world, identifiability_dimension

log = logging.getLogger("multiexp")

EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def _f(x) -> str:
    return repr(float(x))


def _write_rows(args, name: str, header, rows) -> None:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    text = buf.getvalue()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.csv").write_text(text)
        log.info("wrote %s", out / f"{name}.csv")
    else:
        sys.stdout.write(text)


def _doc(args) -> dict:
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    return cfgmod.load(args.config)


def cmd_allocate(args) -> None:
    problem = cfgmod.budget_problem(_doc(args))
    plan = allocate(problem)
    rows = [
        [j + 1, _f(e.a), _f(e.c), _f(plan.gamma[j]), _f(plan.n_real[j]), int(plan.n_int[j])]
        for j, e in enumerate(problem.experiments)
    ]
    _write_rows(args, "allocate", ["experiment", "a", "c", "gamma", "n_real", "n_int"], rows)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def cmd_bound(args) -> None:
    doc = _doc(args)
    budgets = [float(x) for x in _as_list(cfgmod._get(doc, "C"))]
    deltas = [float(x) for x in _as_list(doc.get("delta", 0.1))]
    if "predictor_class" in doc:
        pc = cfgmod.predictor_class(doc["predictor_class"])
        a, regime, label = class_constants(pc), pc.regime, pc.name
        c = [float(x) for x in cfgmod._get(doc, "c")]
    else:
        base = cfgmod.budget_problem({**doc, "budget": budgets[0], "delta": deltas[0]})
        a, c, regime, label = base.a, list(base.c), base.regime, "custom"
    rows = []
    for C in budgets:
        for delta in deltas:
            rep = bound_thm45(BudgetProblem.from_arrays(a, c, C, delta, regime))
            rows.append([label, regime, _f(C), _f(delta), _f(rep.tight), _f(rep.loose),
                         ";".join(_f(x) for x in rep.per_experiment_a)])
    _write_rows(args, "bound", ["class", "regime", "C", "delta", "tight", "loose", "a"], rows)


def cmd_estimate(args) -> None:
    doc = cfgmod.load(args.config) if args.config else {}
    points = args.points or doc.get("points")
    if not points:
        raise ConfigError("sample points CSV required (--points or 'points' in config)")
    try:
        X = np.loadtxt(points, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read points from {points}: {exc}") from None
    norm = args.norm or doc.get("norm", "l2")
    W = float(args.W if args.W is not None else doc.get("W", 1.0))
    K = int(args.K if args.K is not None else doc.get("K", DEFAULT_DRAWS))
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    fn = {"l2": estimate_linear_l2, "l1": estimate_linear_l1}.get(norm)
    if fn is None:
        raise ConfigError(f"norm must be 'l2' or 'l1', got {norm!r}")
    est = fn(X, W, K, seed, threads=args.threads)
    _write_rows(args, "rademacher", ["mean", "stderr", "class_bound", "n", "K"],
                [[_f(est.mean), _f(est.stderr), _f(est.class_bound), est.n, est.draws]])


def cmd_simulate(args) -> None:
    doc = _doc(args)
    config = cfgmod.synthetic_config(cfgmod._get(doc, "synthetic"), args.seed, doc.get("X2_mode"))
    res = simulate(config, float(cfgmod._get(doc, "C")))
    rows = [[config.m, _f(cfgmod._get(doc, "C")), ";".join(map(str, res["n"])),
             _f(res["d_m"]), _f(res["w_err"]), res["failure"] or ""]]
    _write_rows(args, "simulate", ["m", "C", "n", "d_m", "w_err", "failure"], rows)


def cmd_sweep(args) -> None:
    doc = _doc(args)
    fixed = True if args.fixed_world else None
    config = cfgmod.sweep_config(doc, args.seed, args.reps, fixed)
    result = run_sweep(config, threads=args.threads)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(result, out / "sweep.csv")
    if result.rows:
        for metric in ("dm", "w"):
            emit_svg(result, out / f"sweep_{metric}.svg", metric,
                     title=f"X2 {config.X2_mode}, {config.reps} reps")
    log.info("world mode: %s; failed reps: %d", result.metadata["world"], result.metadata["failures"])
    print(out / "sweep.csv")


def cmd_identifiability(args) -> None:
    doc = _doc(args)
    config = cfgmod.synthetic_config(cfgmod._get(doc, "synthetic"), args.seed, doc.get("X2_mode"))
    world = generate_world(config)
    rows = [[m, identifiability_dimension(world, m)] for m in range(1, config.m + 1)]
    _write_rows(args, "identifiability", ["m", "dimension"], rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="output directory (default: stdout / cwd)")
    common.add_argument("--reps", type=int, help="override repetition count")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="multiexp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("allocate", parents=[common], help="budget-optimal sample counts").set_defaults(func=cmd_allocate)
    sub.add_parser("bound", parents=[common], help="divergence bounds").set_defaults(func=cmd_bound)
    est = sub.add_parser("estimate-rademacher", parents=[common], help="Monte Carlo Rademacher complexity")
    est.add_argument("--points", help="CSV file, one point per row")
    est.add_argument("--W", type=float, help="weight-ball radius")
    est.add_argument("--K", type=int, help="number of sign draws")
    est.add_argument("--norm", choices=("l2", "l1"))
    est.set_defaults(func=cmd_estimate)
    sub.add_parser("simulate", parents=[common], help="single synthetic run").set_defaults(func=cmd_simulate)
    sw = sub.add_parser("sweep", parents=[common], help="success-probability sweep")
    sw.add_argument("--fixed-world", action="store_true", help="one world per (C, m) cell")
    sw.set_defaults(func=cmd_sweep)
    sub.add_parser("identifiability", parents=[common], help="invisible dimensions per m").set_defaults(
        func=cmd_identifiability)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
