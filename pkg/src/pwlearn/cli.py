"""Command-line front end.

Subcommands: ``match`` (one adversary match), ``sweep`` (matches over an
epsilon grid), ``bounds`` (closed-form bound table), ``audit`` (large-scale
invariant audit), ``eval`` (evaluate a function file).

Exit codes: 0 success, 1 usage error, 2 invariant/audit failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

from . import pwl
from .adversary import AdversaryConfig, run_match
from .bounds import BOUNDS_CSV_HEADER, bound_report, upper_bound_linint
from .errors import AuditFailure, DomainError, Error, InequalityViolation
from .harness import (
    ExperimentConfig,
    MAX_STAGES,
    parse_epsilon_grid,
    run_invariant_audit,
    run_sweep,
    write_sweep_csv,
)
from .learner import LEARNER_KINDS, make_learner, write_trace_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUDIT = 2
EXIT_IO = 3


def _fmt(value: float) -> str:
    return format(value, ".17g")


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; usage errors are 1 here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        metavar="PATH",
        help="JSON file whose keys override the corresponding flags",
    )


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="pwlearn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="run one adversary match")
    p.add_argument("--learner", choices=LEARNER_KINDS, default="linint")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--stages", type=int, default=14)
    p.add_argument("--out", metavar="PATH", help="write the trial trace CSV here")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("sweep", help="adversary matches over an epsilon grid")
    p.add_argument("--learner", choices=LEARNER_KINDS, default="linint")
    p.add_argument("--epsilons", metavar="LIST", help="comma-separated epsilons")
    p.add_argument("--epsilon-grid", metavar="SPEC", help="log:a:b:n grid")
    p.add_argument("--stages", type=int, default=14)
    p.add_argument("--out", metavar="PATH", help="write the sweep CSV here")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="closed-form bound table")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--epsilons", metavar="LIST")
    p.add_argument("--epsilon-grid", metavar="SPEC", help="log:a:b:n grid")
    p.add_argument("--partial-stages", type=int, default=60)
    p.add_argument("--out", metavar="PATH")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("audit", help="large-scale invariant audit")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stages", type=int, default=12)
    p.add_argument("--max-trials", type=int, default=10_000)
    p.add_argument("--out", metavar="PATH", help="write the report JSON here")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("eval", help="evaluate a function file")
    p.add_argument("--function", metavar="PATH", required=True)
    p.add_argument("--x", type=float, required=True)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_eval)

    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid config JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DomainError("config JSON must be an object")
    reserved = {"config", "func", "command"}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest in reserved or not hasattr(args, dest):
            raise DomainError(f"unknown config key {key!r}")
        setattr(args, dest, value)


def _require_adversary_epsilon(eps: float) -> None:
    if not 0.0 < eps < 0.5:
        raise DomainError(
            f"epsilon {eps!r} is outside the adversary's range (0, 0.5); "
            "use the bounds subcommand for that regime"
        )


def _cmd_match(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        mode="match", learner=args.learner, epsilon=args.epsilon, stages=args.stages
    )
    config.validate()
    _require_adversary_epsilon(args.epsilon)
    result = run_match(
        make_learner(args.learner), AdversaryConfig(args.epsilon, args.stages)
    )
    if args.out:
        write_trace_csv(result.records, args.out)
    json.dump(result.to_json_dict(), sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def _grid_from_args(args: argparse.Namespace, allow_single: bool = False) -> list[float]:
    sources = []
    if getattr(args, "epsilon", None) is not None and allow_single:
        sources.append([float(args.epsilon)])
    if args.epsilons:
        sources.append(parse_epsilon_grid(str(args.epsilons)))
    if args.epsilon_grid:
        sources.append(parse_epsilon_grid(str(args.epsilon_grid)))
    if len(sources) > 1:
        raise DomainError("give only one of --epsilon, --epsilons, --epsilon-grid")
    if not sources:
        raise DomainError("an epsilon grid is required (--epsilons or --epsilon-grid)")
    return sources[0]


def _cmd_sweep(args: argparse.Namespace) -> int:
    epsilons = _grid_from_args(args)
    for eps in epsilons:
        _require_adversary_epsilon(eps)
    config = ExperimentConfig(
        mode="sweep",
        learner=args.learner,
        epsilons=epsilons,
        stages=args.stages,
        out=args.out,
    )
    rows = run_sweep(config)
    if not args.out:
        write_sweep_csv(rows, sys.stdout)
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    epsilons = _grid_from_args(args, allow_single=True)
    stages = args.partial_stages
    if stages < 1:
        raise DomainError(f"--partial-stages must be at least 1, got {stages!r}")
    lines = [",".join(BOUNDS_CSV_HEADER)]
    for eps in epsilons:
        upper = upper_bound_linint(eps)  # raises outside (0, 1)
        if 0.0 < eps < 0.5:
            rep = bound_report(eps, stages)
            fields = [
                _fmt(rep.epsilon),
                _fmt(rep.upper_linint),
                _fmt(rep.lower_closed_form),
                _fmt(rep.lower_partial),
                _fmt(rep.ratio_upper),
                _fmt(rep.ratio_lower),
            ]
        else:
            print(
                f"warning: epsilon {eps!r} is outside (0, 0.5); the adversary "
                "lower bound is undefined there and its columns are nan",
                file=sys.stderr,
            )
            fields = [
                _fmt(eps),
                _fmt(upper),
                "nan",
                "nan",
                _fmt(upper * math.sqrt(eps)),
                "nan",
            ]
        lines.append(",".join(fields))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        mode="invariants",
        runs=args.runs,
        seed=args.seed,
        stages=args.stages,
        max_trials=args.max_trials,
    )
    try:
        report = run_invariant_audit(config)
    except AuditFailure as exc:
        print(str(exc), file=sys.stderr)
        if args.out and exc.report is not None:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(exc.report.to_json_dict(), fh, indent=2)
                fh.write("\n")
        return EXIT_AUDIT
    payload = json.dumps(report.to_json_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    f = pwl.load_function(args.function)
    value = pwl.evaluate(f, args.x)
    print(_fmt(value))
    print(f"energy = {_fmt(pwl.energy(f))}")
    print(f"norm_1 = {_fmt(pwl.derivative_norm(f, 1.0))}")
    print(f"norm_2 = {_fmt(pwl.derivative_norm(f, 2.0))}")
    print(f"norm_inf = {_fmt(pwl.derivative_norm(f, math.inf))}")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config_file(args)
        return args.func(args)
    except (AuditFailure, InequalityViolation) as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
