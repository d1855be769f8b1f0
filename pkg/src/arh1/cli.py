"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or model error (including
violated estimation hypotheses), 3 failed acceptance checks in ``study``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from arh1 import estimators as est
from arh1 import harness
from arh1 import hilbert as hc
from arh1 import io as aio
from arh1 import predictor
from arh1.model import ModelError, make_model, simulate, stationary_law

log = logging.getLogger("arh1")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECKS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_model_args(p: argparse.ArgumentParser, defaults: bool = True) -> None:
    dflt = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--d", type=int, default=dflt(25), help="dimension of the coordinate space")
    p.add_argument("--rho", default=dflt("power:0.8,2"),
                   help="operator spec: zero | diag:s1,.. | power:a,p | rotdiag:s1,..[@seed] | "
                        "rotpower:a,p[@seed] | kernel:gaussian|brownian,norm[,scale]")
    p.add_argument("--c-eps", default=dflt("power:1,2"),
                   help="innovation covariance: power:a,p | diag:c1,.. | zero")
    p.add_argument("--law", choices=["gaussian", "truncated_gaussian"], default=dflt("gaussian"))
    p.add_argument("--bound", type=float, default=None,
                   help="innovation norm bound for the truncated law")


def _add_rule_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, help="fixed truncation level")
    g.add_argument("--rule", help="fixed:K | variance_fraction:Q | gap_budget:C")


def _rule_text(args, default: str | None = "fixed:3") -> str | None:
    if args.k is not None:
        return f"fixed:{args.k}"
    return args.rule or default


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arh1", description="ARH(1) simulation, estimation and studies")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a trajectory and write CSV + metadata")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="trajectory.csv")

    p = sub.add_parser("estimate", help="estimate the autocorrelation operator")
    p.add_argument("--input", default="trajectory.csv")
    _add_rule_args(p)
    p.add_argument("--kind", choices=["componentwise", "diagonal_svd"], default="componentwise")
    p.add_argument("--out", default="estimator.json")

    p = sub.add_parser("predict", help="one-step plug-in forecasts along a trajectory")
    p.add_argument("--input", default="trajectory.csv")
    p.add_argument("--estimator", default="estimator.json")
    p.add_argument("--start", type=int, default=1)
    p.add_argument("--out", default="predictions.csv")

    p = sub.add_parser("study", help="run a Monte Carlo convergence study")
    p.add_argument("config", nargs="?", help="INI study file (defaults used when omitted)")
    p.add_argument("--out-dir", default="study-report")
    _add_model_args(p, defaults=False)
    p.add_argument("--n-grid", help="comma-separated sample sizes")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--beta", type=float)
    _add_rule_args(p)
    p.add_argument("--threads", type=int,
                   help="worker threads (0 = auto); defaults to $ARH1_THREADS or 1")
    p.add_argument("--write-config", action="store_true",
                   help="print the effective config as INI and exit")

    p = sub.add_parser("check-bounds", help="evaluate perturbation bounds on one sample")
    p.add_argument("--input", help="trajectory CSV; its metadata supplies the model")
    _add_model_args(p, defaults=False)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_rule_args(p)
    p.add_argument("--proxy-gaps", action="store_true",
                   help="use empirical instead of true spectral gaps (report marked proxy)")
    p.add_argument("--out", help="write the JSON report here as well")
    return parser


def _model_from(args, meta: dict | None = None):
    meta = dict(meta or {})
    spec = {k: v for k, v in meta.items() if v is not None}
    for key, attr in (("d", "d"), ("rho", "rho"), ("c_eps", "c_eps"), ("law", "law"),
                      ("bound", "bound")):
        v = getattr(args, attr, None)
        if v is not None:
            spec[key] = v
    spec.setdefault("d", 25)
    spec.setdefault("rho", "power:0.8,2")
    return make_model(spec["rho"], int(spec["d"]), spec.get("c_eps", "power:1,2"),
                      spec.get("law", "gaussian"), spec.get("bound"))


def cmd_simulate(args) -> int:
    model = make_model(args.rho, args.d, args.c_eps, args.law, args.bound)
    traj = simulate(model, args.n, burn_in=args.burn_in, seed=args.seed)
    side = aio.write_trajectory(args.out, traj)
    log.info("wrote %s (n=%d, d=%d) and %s", args.out, traj.n, traj.d, side)
    return EXIT_OK


def cmd_estimate(args) -> int:
    traj = aio.read_trajectory(args.input)
    emp = est.empirical_operators(traj)
    plan = est.select_truncation(emp, est.parse_rule(_rule_text(args)))
    fitted = est.estimate(emp, plan, args.kind)
    fitted.meta.update(rule=str(plan.rule), n=emp.n, source=str(args.input))
    aio.write_estimator(args.out, fitted)
    log.info("wrote %s (%s, k_n=%d)", args.out, fitted.kind, fitted.k)
    return EXIT_OK


def cmd_predict(args) -> int:
    traj = aio.read_trajectory(args.input)
    fitted = aio.read_estimator(args.estimator)
    t, sq = predictor.forecast_errors(traj, fitted, args.start)
    aio.write_predictions(args.out, t, sq)
    log.info("wrote %s (%d rows, mean squared error %.6g)", args.out, len(t), sq.mean())
    return EXIT_OK


def _threads(args) -> int:
    n = args.threads
    if n is None:
        n = int(os.environ.get("ARH1_THREADS", "1") or 1)
    return (os.cpu_count() or 1) if n == 0 else max(1, n)


def cmd_study(args) -> int:
    overrides = {"rho": args.rho, "c_eps": args.c_eps, "law": args.law, "bound": args.bound,
                 "d": args.d, "n_grid": args.n_grid, "replications": args.replications,
                 "master_seed": args.master_seed, "beta": args.beta,
                 "truncation": _rule_text(args, default=None)}
    config = harness.load_config(args.config, overrides)
    if args.write_config:
        sys.stdout.write(harness.config_to_ini(config))
        return EXIT_OK
    report = harness.run_study(config, threads=_threads(args))
    cells, summary = report.write(args.out_dir)
    for name, claim in report.claims.items():
        print(f"{'PASS' if claim['passed'] else 'FAIL'}  {name}")
    log.info("wrote %s and %s", cells, summary)
    return EXIT_OK if report.passed else EXIT_CHECKS


def cmd_check_bounds(args) -> int:
    if args.input:
        traj = aio.read_trajectory(args.input)
        model = _model_from(args, traj.model_id)
        if model.d != traj.d:
            raise hc.DimensionError(f"model dimension {model.d} != data dimension {traj.d}")
    else:
        model = _model_from(args)
        traj = simulate(model, args.n, seed=args.seed)
    law = stationary_law(model)
    emp = est.empirical_operators(traj)
    plan = est.select_truncation(emp, est.parse_rule(_rule_text(args)))
    eig = est.check_eigenvector_bound(emp, law, plan, use_true_gaps=not args.proxy_gaps)
    out = {"k_n": plan.k, "n": emp.n,
           "eigenvector": vars(eig)}
    try:
        s = est.check_bound_svd_perturbation(emp, law, plan)
        out["svd_right"] = vars(s.right)
        out["svd_left"] = vars(s.left)
        out["singular_values"] = vars(s.singular_values)
        out["lambda_rho"] = s.lambda_rho
        out["singular_sum"] = {"value": s.singular_sum, "at_most_one": s.singular_sum_ok}
    except est.DegenerateSpectrumError as exc:
        out["svd"] = {"skipped": str(exc)}
    text = json.dumps(out, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "predict": cmd_predict,
            "study": cmd_study, "check-bounds": cmd_check_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (est.AssumptionError, ModelError, aio.FormatError, hc.DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
