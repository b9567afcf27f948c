"""Sensitivity of the synthetic benchmark to the Canny hysteresis quantiles.

Sigma is fixed at 2.5 but the low/high quantile defaults (0.7 / 0.9) are
a free choice; this sweep shows how much it matters.

    python3 scripts/sweep_hysteresis.py -n 20 --jobs 4
"""

import argparse
import itertools
import sys
from pathlib import Path

from rimfit.config import Config, replace

sys.path.insert(0, str(Path(__file__).parent))
from bench_synthetic import run  # noqa: E402


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--low", type=float, nargs="+", default=[0.5, 0.7, 0.8])
    p.add_argument("--high", type=float, nargs="+", default=[0.85, 0.9, 0.95])
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    print(f"{'low':>5} {'high':>5} {'rec@5':>6} {'B max':>7} {'B mean':>7}")
    for lo, hi in itertools.product(args.low, args.high):
        if lo > hi:
            continue
        cfg = replace(Config(), canny_low_quantile=lo, canny_high_quantile=hi)
        _, rec, bmax, bmean, _ = run(args.seed, 0.25, args.n, cfg, args.jobs)
        print(f"{lo:>5.2f} {hi:>5.2f} {rec:>6.3f} {bmax:>7.2f} {bmean:>7.2f}")


if __name__ == "__main__":
    main()
