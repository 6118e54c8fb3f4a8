"""Command line front end: ``brkga solve | compare | control``."""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import experiment
from .errors import ConfigError, ParseError
from .engine import StopCriteria
from .instances import decoder_for, parse_instance, random_knapsack, random_tsp, write_instance
from .params import (RandomControlBounds, check, default_params, errors_of, load_config,
                     validate_bounds)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

DEFAULT_GENERATIONS = 1000


def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path, help="TSP or knapsack instance file")
    src.add_argument("--random-tsp", type=int, metavar="N",
                     help="generate an N-city TSP from --instance-seed")
    src.add_argument("--random-knapsack", type=int, metavar="N",
                     help="generate an N-item knapsack from --instance-seed")
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--rounded", action="store_true",
                   help="round TSP distances to the nearest integer")
    p.add_argument("--config", type=Path, help="key = value parameter file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-generations", type=int)
    p.add_argument("--max-seconds", type=float)
    p.add_argument("--target", type=float)
    p.add_argument("--out-dir", type=Path, default=Path("brkga-out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brkga", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one seeded optimization")
    _common(solve)
    solve.add_argument("--variant", default=None, help="RKGA, BRKGA or BRKGA-MP, optionally NAME:rho")

    cmp_ = sub.add_parser("compare", help="run several variants over paired seeds")
    _common(cmp_)
    cmp_.add_argument("--variant", action="append", required=True, dest="variants",
                      help="repeat for each variant (NAME or NAME:rho)")
    cmp_.add_argument("--seeds", type=int, default=10,
                      help="number of paired seeds, starting at --seed")

    ctl = sub.add_parser("control", help="solve with random online parameter control")
    _common(ctl)
    ctl.add_argument("--variant", default=None)
    ctl.add_argument("--pop-size-bounds", type=int, nargs=2, metavar=("LO", "HI"))
    ctl.add_argument("--elite-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    ctl.add_argument("--mutant-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    ctl.add_argument("--rho-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    return parser


def _load_instance(args, out_dir: Path):
    if args.instance is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            inst = parse_instance(args.instance, rounded=args.rounded)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return inst
    if args.random_tsp is not None:
        inst = random_tsp(args.random_tsp, args.instance_seed)
        if args.rounded:
            inst = replace(inst, rounded=True)
    else:
        inst = random_knapsack(args.random_knapsack, args.instance_seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_instance(inst, out_dir / "instance.txt")
    return inst


def _params(args, n):
    params = default_params(n)
    if args.config is not None:
        params = load_config(args.config, n, base=params)
    variant = getattr(args, "variant", None)
    if variant:
        params = experiment.parse_variant(variant, params)
    return params


def _stop(args) -> StopCriteria:
    gens = args.max_generations
    if gens is None and args.max_seconds is None and args.target is None:
        gens = DEFAULT_GENERATIONS
    return StopCriteria(gens, args.max_seconds, args.target)


def _report_warnings(violations):
    for v in violations:
        if v.level == "warning":
            print(f"warning: {v.field}: {v.message}", file=sys.stderr)


def _solve(args, inst, params, control=None) -> int:
    best, trace, summary = experiment.solve_to_dir(
        params, decoder_for(inst), _stop(args), args.seed, args.out_dir, control=control,
        workers=experiment.worker_count())
    print(f"f* = {best.f_star!r}")
    print(f"solution = {summary['solution']}")
    print(f"generations = {trace.final.total_generations}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args, args.out_dir)
    params = _params(args, len(inst))
    _report_warnings(check(params))
    return _solve(args, inst, params)


def cmd_control(args) -> int:
    inst = _load_instance(args, args.out_dir)
    params = _params(args, len(inst))
    _report_warnings(check(params))
    default = RandomControlBounds.around(params)
    bounds = RandomControlBounds(
        tuple(args.pop_size_bounds or default.pop_size),
        tuple(args.elite_bounds or default.elite_pct),
        tuple(args.mutant_bounds or default.mutant_pct),
        tuple(args.rho_bounds or default.rho))
    bad = validate_bounds(bounds, params)
    if bad:
        raise ConfigError("invalid control bounds", bad)
    return _solve(args, inst, params, control=bounds)


def cmd_compare(args, parser) -> int:
    if len(args.variants) < 2:
        parser.error("compare needs at least two --variant options")
    inst = _load_instance(args, args.out_dir)
    base = _params(args, len(inst))
    seeds = list(range(args.seed, args.seed + args.seeds))
    for variant in args.variants:
        _report_warnings(check(experiment.parse_variant(variant, base)))
    plan = experiment.ExperimentPlan(inst, args.variants, seeds, _stop(args), args.out_dir, base)
    rows = experiment.compare(plan)
    sys.stdout.write(experiment.format_table(rows))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "control":
            return cmd_control(args)
        return cmd_compare(args, parser)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for v in errors_of(exc.violations) or [exc]:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
