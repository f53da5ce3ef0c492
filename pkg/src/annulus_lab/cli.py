"""Command line entry point: ``annulus-lab run`` and ``annulus-lab verify``."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (EXPERIMENTS, ConfigError, ExperimentConfig, load_report, run,
                      verify_report, write_report)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _degrees(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annulus-lab", description="Annulus interpolation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment and write its report")
    r.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    r.add_argument("--theta", type=float, default=0.5)
    r.add_argument("--grid-size", type=int, default=4096)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--samples", type=int, default=None, help="sample count (experiment default if omitted)")
    r.add_argument("--zeta-degrees", type=_degrees, default=(2, 4, 8, 16))
    r.add_argument("--search-budget", type=int, default=200)
    r.add_argument("--search-samples", type=int, default=50)
    r.add_argument("--out", required=True, help="path of the JSON report")
    v = sub.add_parser("verify", help="recompute the verdicts of a stored report")
    v.add_argument("--report", required=True)
    return parser


def _print_verdicts(verdicts: dict) -> None:
    for name, v in verdicts.items():
        status = "PASS" if v["passed"] else "FAIL"
        print(f"{status} {name}: {v['value']:.6g} {v['relation']} {v['threshold']:.6g}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        if args.command == "run":
            config = ExperimentConfig(
                experiment=args.experiment, theta=args.theta, grid_size=args.grid_size,
                seed=args.seed, sample_count=args.samples, zeta_degrees=args.zeta_degrees,
                out_path=args.out, search_budget=args.search_budget, search_samples=args.search_samples,
            ).validate()
            report = run(config)
            for path in write_report(report, args.out):
                print(f"wrote {path}")
            _print_verdicts(report.verdicts)
            return EXIT_PASS if report.passed else EXIT_FAIL
        data = load_report(args.report)
        result = verify_report(data)
        _print_verdicts(result.verdicts)
        for name in result.mismatches:
            print(f"MISMATCH {name}: stored verdict differs from the recomputed one")
        return EXIT_PASS if result.passed else EXIT_FAIL
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
