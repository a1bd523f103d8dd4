"""Command line interface.

Subcommands:

* ``run``    -- execute a config-driven experiment, write tables.
* ``check``  -- randomized inequality/property suites; exit 0 iff all hold.
* ``decay``  -- the preset two-class CLT-radius decay study.
* ``oracle`` -- dense-grid cross-checks of the gradient solvers.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, parse_config
from .experiment import OUT_DIR_ENV, decay_study, run_experiment
from .suites import ALL_CHECKS, grid_oracle_suite


def _add_out(parser):
    parser.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_DIR_ENV} or config)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="metanml",
        description="Restricted-support NML classification with leakage "
                    "accounting and self-verifying bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config-driven experiment")
    p_run.add_argument("--config", required=True, help="path to a config file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
    p_run.add_argument("--workers", type=int, default=None,
                       help="override the worker count")
    _add_out(p_run)

    p_check = sub.add_parser("check", help="run the inequality suites")
    p_check.add_argument("--full", action="store_true",
                         help="use the full instance counts")

    p_decay = sub.add_parser("decay", help="run the preset decay study")
    p_decay.add_argument("--replications", type=int, default=200)
    p_decay.add_argument("--seed", type=int, default=20250807)
    p_decay.add_argument("--workers", type=int, default=4)
    _add_out(p_decay)

    p_oracle = sub.add_parser("oracle", help="dense-grid solver cross-checks")
    p_oracle.add_argument("--instances", type=int, default=100)
    p_oracle.add_argument("--seed", type=int, default=23)
    return parser


def _cmd_run(args):
    cfg = parse_config(args.config)
    records, aggregate, paths = run_experiment(
        cfg, workers=args.workers, out_dir=args.out, master_seed=args.seed)
    print(f"{len(records)} records"
          + (f" -> {paths['records']}" if paths else " (no output dir set)"))
    for row in aggregate["per_n"]:
        print(f"  n={row['n']}: median gap {row['median_gap']:.6g}, "
              f"median exp(leak)-1 {row['median_exp_leak_minus_1']:.6g}, "
              f"bound violations {row['gap_bound_violations']}")
    bad = aggregate["total_gap_bound_violations"]
    if bad:
        print(f"FAIL: {bad} bound violations", file=sys.stderr)
        return 1
    return 0


# reduced counts keep the default `check` invocation short
_QUICK_COUNTS = {
    "gap_bound_suite": 300,
    "redundancy_suite": 1000,
    "triangle_suite": 200,
    "fisher_bound_suite": 200,
    "leakage_property_suite": 150,
    "pinsker_suite": 1000,
    "grid_oracle_suite": 40,
}


def _cmd_check(args):
    ok = True
    for suite in ALL_CHECKS:
        if args.full:
            result = suite()
        else:
            result = suite(_QUICK_COUNTS[suite.__name__])
        print(result.line())
        ok = ok and result.ok
    return 0 if ok else 1


def _cmd_decay(args):
    out = args.out or os.environ.get(OUT_DIR_ENV)
    records, aggregate, paths = decay_study(
        replications=args.replications, master_seed=args.seed,
        workers=args.workers, out_dir=out)
    for row in aggregate["per_n"]:
        print(f"n={row['n']}: median exp(leak)-1 "
              f"{row['median_exp_leak_minus_1']:.6g}, coverage "
              f"{row['coverage_freq']:.3f}, chain violations "
              f"{row['chain_violations']}")
    print(f"decay slope: {aggregate['leak_decay_slope']:.4f}")
    if paths:
        print(f"tables -> {paths['records']}")
    bad = (aggregate["total_chain_violations"]
           + aggregate["total_gap_bound_violations"])
    slope = aggregate["leak_decay_slope"]
    cov_ok = all(row["coverage_freq"] is None or row["coverage_freq"] >= 0.90
                 for row in aggregate["per_n"])
    slope_ok = slope is not None and -0.65 <= slope <= -0.35
    if bad or not cov_ok or not slope_ok:
        print("FAIL: decay study checks did not all hold", file=sys.stderr)
        return 1
    return 0


def _cmd_oracle(args):
    result = grid_oracle_suite(args.instances, args.seed)
    print(result.line())
    print(f"  worst sup deviation:   {result.info['worst_sup_dev']:.3e}")
    print(f"  worst delta deviation: {result.info['worst_delta_dev']:.3e}")
    return 0 if result.ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "decay":
            return _cmd_decay(args)
        return _cmd_oracle(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
