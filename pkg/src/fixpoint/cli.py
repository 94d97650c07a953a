"""``fixpoint`` command line: check | run | sweep | abbr | experiment.

Machine-readable results go to stdout as JSON; human summaries go to
stderr unless ``--quiet``. Exit status is 0 on success, 1 on usage, parse
or I/O errors, and 2 when the operator is rejected on mathematical grounds.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, experiments
from .errors import FixpointError, IdentityOperator, MathematicalRejection, ValidationError
from .iteration import StoppingRule, km_run
from .numkernel import as_matrix, spectral_norm
from .operators import DEFAULT_NONEXP_TOL, AffineOperator, operator_from_dict
from .schedules import Adaptive, Constant, schedule_from_dict


def _floats(text: str, name: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}", name) from None


def _operator_doc(args) -> dict:
    if args.diag is not None:
        d = _floats(args.diag, "--diag")
        return {"dim": len(d), "rows": np.diag(d).tolist()}
    if args.operator is None:
        raise ValidationError("one of --operator or --diag is required", "--operator")
    with open(args.operator, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON ({exc})", args.operator) from exc


def _schedule(args):
    if args.schedule is not None:
        with open(args.schedule, encoding="utf-8") as fh:
            try:
                return schedule_from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid JSON ({exc})", args.schedule) from exc
    if args.lam is not None:
        return Constant(args.lam)
    if args.adaptive is not None:
        return Adaptive(args.adaptive)
    raise ValidationError("one of --schedule, --lambda, --adaptive is required", "--schedule")


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _note(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_check(args) -> int:
    doc = _operator_doc(args)
    try:
        op = operator_from_dict(doc)
    except MathematicalRejection as exc:
        out = {"nonexpansive": False, "error": str(exc)}
        try:
            out["spectral_norm"] = spectral_norm(as_matrix(doc["rows"]))
            out["nonexpansive"] = out["spectral_norm"] <= 1 + DEFAULT_NONEXP_TOL
        except FixpointError:
            pass
        _emit(out)
        _note(args, f"rejected: {exc}")
        return 2
    R = op.linear_part
    out = {
        "nonexpansive": True,
        "spectral_norm": R.nonexpansive_certificate,
        "fix_dim": len(R.fix_basis),
    }
    try:
        report = analysis.lambda_bar(R)
        out.update(
            lambda_bar=report.lambda_bar,
            kappa=report.kappa,
            averaged=analysis.is_averaged(report),
            method=report.method.value,
        )
    except IdentityOperator:
        # every point fixed: the infimum is over an empty set and Id is 0-averaged
        out.update(lambda_bar=None, kappa=0.0, averaged=True)
    if isinstance(op, AffineOperator):
        out["anchor"] = op.anchor.tolist()
    _emit(out)
    _note(args, f"lambda_bar={out['lambda_bar']} kappa={out['kappa']} averaged={out['averaged']}")
    return 0


def cmd_run(args) -> int:
    op = operator_from_dict(_operator_doc(args))
    schedule = _schedule(args)
    if args.x0 is not None:
        x0 = np.array(_floats(args.x0, "--x0"))
    else:
        x0 = experiments.random_start(args.seed, 0, op.dim)
    target = None
    if args.target is not None:
        target = (np.array(_floats(args.target, "--target")), args.target_tol)
    residual_thr = args.stop_residual
    if args.stop_norm is None and residual_thr is None and target is None:
        residual_thr = 1e-10
    stop = StoppingRule(
        max_iter=args.max_iter,
        norm_threshold=args.stop_norm,
        residual_threshold=residual_thr,
        target=target,
    )
    result = km_run(op, schedule, x0, stop)
    out = result.to_dict(verbose=args.verbose)
    out["x0"] = x0.tolist()
    out["limit"] = op.project_fix(x0).tolist()
    _emit(out)
    _note(args, f"{result.termination.value} after {result.iterations} iterations")
    return 0


def _config(args):
    op = operator_from_dict(_operator_doc(args))
    grid = None
    if args.grid is not None:
        grid = experiments.default_grid(args.epsilon_clip, args.grid)
    return experiments.ExperimentConfig(
        operator=op,
        num_trials=args.trials,
        seed=args.seed,
        stop_threshold=args.stop_norm if args.stop_norm is not None else 1e-6,
        epsilon_clip=args.epsilon_clip,
        lambda_grid=grid,
        max_iter=args.max_iter,
        start_distribution=args.start,
    )


def _write_outputs(args, report):
    if args.csv:
        experiments.emit_csv(report, args.csv)
    if args.plot:
        experiments.emit_plot(report, args.plot)


def cmd_sweep(args) -> int:
    report = experiments.run_experiment(_config(args), abbr=False)
    _write_outputs(args, report)
    _emit(
        {
            "lambda_opt_empirical": report.lambda_opt_empirical,
            "per_lambda": [s.to_dict() for s in report.per_lambda],
        }
    )
    _note(args, json.dumps(report.summary()))
    return 0


def cmd_abbr(args) -> int:
    report = experiments.run_experiment(_config(args), sweep=False)
    if args.csv:
        experiments.emit_csv(report, args.csv)
    _emit(report.abbr.to_dict())
    _note(args, f"aBBR median {report.abbr.median}, failures {report.abbr.failures}")
    return 0


def cmd_experiment(args) -> int:
    report = experiments.run_experiment(_config(args))
    _write_outputs(args, report)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(experiments.report_to_json(report))
    summary = report.summary()
    _emit(summary)
    _note(args, "  ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--operator", metavar="PATH", help="operator JSON file")
    src.add_argument("--diag", metavar="a,b,...", help="diagonal matrix shorthand")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-iter", type=int, default=1_000_000)
    common.add_argument("--stop-norm", type=float, metavar="T")
    common.add_argument("--quiet", action="store_true", help="suppress stderr summaries")

    parser = _Parser(prog="fixpoint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check", parents=[common], help="nonexpansiveness and averagedness diagnostics")

    run = sub.add_parser("run", parents=[common], help="one relaxed fixed-point run")
    sched = run.add_mutually_exclusive_group()
    sched.add_argument("--schedule", metavar="PATH")
    sched.add_argument("--lambda", dest="lam", type=float, metavar="L")
    sched.add_argument("--adaptive", type=float, metavar="EPS")
    run.add_argument("--x0", metavar="v1,v2,...")
    run.add_argument("--stop-residual", type=float, metavar="T")
    run.add_argument("--target", metavar="v1,v2,...")
    run.add_argument("--target-tol", type=float, default=1e-6)
    run.add_argument("--verbose", action="store_true", help="include lambda/residual histories")

    exp = _Parser(add_help=False)
    exp.add_argument("--trials", type=int, default=100)
    exp.add_argument("--grid", type=int, metavar="N", help="number of uniform grid points")
    exp.add_argument("--epsilon-clip", type=float, default=1e-6)
    exp.add_argument("--start", default="unit_sphere", choices=[d.value for d in experiments.StartDistribution])
    exp.add_argument("--csv", metavar="PATH")

    sweep = sub.add_parser("sweep", parents=[common, exp], help="constant-lambda sweep only")
    sweep.add_argument("--plot", metavar="PATH")
    sub.add_parser("abbr", parents=[common, exp], help="adaptive runs only")
    full = sub.add_parser("experiment", parents=[common, exp], help="sweep plus adaptive runs")
    full.add_argument("--plot", metavar="PATH")
    full.add_argument("--json", metavar="PATH", help="write the full report as JSON")
    return parser


_COMMANDS = {
    "check": cmd_check,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "abbr": cmd_abbr,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MathematicalRejection as exc:
        print(f"fixpoint: {exc}", file=sys.stderr)
        return 2
    except (FixpointError, OSError) as exc:
        print(f"fixpoint: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
