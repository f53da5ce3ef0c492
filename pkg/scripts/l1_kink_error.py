"""Error of the plain trapezoid rule for the FL^1 norm versus the kink-refined
quadrature, on random sequences (|u| has kinks wherever u vanishes).

    python3 scripts/l1_kink_error.py --degree 8 --grid 4096 --samples 400
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from annulus_lab import _quad
from annulus_lab.laurent import sample_circle


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--degree", type=int, default=8)
    parser.add_argument("--grid", type=int, default=4096)
    parser.add_argument("--samples", type=int, default=400)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    d = args.degree
    C = rng.uniform(-1, 1, (args.samples, 2 * d + 1)) + 1j * rng.uniform(-1, 1, (args.samples, 2 * d + 1))
    vals = sample_circle(C, -d, args.grid)
    trapezoid = 2 * math.pi / args.grid * np.abs(vals).sum(axis=1)
    refined = _quad.l1_norms(C, vals)
    rel = np.abs(trapezoid - refined) / refined
    print(f"refined rows: {np.mean(trapezoid != refined):.1%}")
    print(f"trapezoid relative error: median {np.median(rel):.2e}, max {rel.max():.2e}")
    print(f"rows above 1e-10: {np.mean(rel > 1e-10):.1%}")


if __name__ == "__main__":
    main()
