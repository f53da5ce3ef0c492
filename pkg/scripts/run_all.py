"""Run every experiment at several theta values and write reports to one directory.

    python3 scripts/run_all.py --out runs --thetas 0.25,0.5,0.75
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from annulus_lab.harness import EXPERIMENTS, ExperimentConfig, run, write_report


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs")
    parser.add_argument("--thetas", default="0.5", help="comma-separated theta values")
    parser.add_argument("--experiments", default=",".join(EXPERIMENTS))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    failed = 0
    for theta in (float(t) for t in args.thetas.split(",")):
        for name in args.experiments.split(","):
            config = ExperimentConfig(experiment=name, theta=theta, seed=args.seed).validate()
            start = time.perf_counter()
            report = run(config)
            path = Path(args.out) / f"{name}_theta{theta:g}.json"
            write_report(report, path)
            bad = [k for k, v in report.verdicts.items() if not v["passed"]]
            failed += bool(bad)
            status = "PASS" if not bad else "FAIL " + ",".join(bad)
            print(f"{name:12s} theta={theta:<5g} {time.perf_counter() - start:7.1f}s  {status}", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
