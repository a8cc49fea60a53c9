"""Simulated null quantiles of the combined statistic against the normal limit.

For each (n, d) pair prints the empirical quantiles next to the standard
normal ones, plus the Kolmogorov distance of the simulated values to N(0, 1).
"""

import argparse
from statistics import NormalDist

import numpy as np

from hidim.harness import simulate_null
from hidim.statistics import ScalingMode


def kolmogorov_distance(values):
    x = np.sort(np.asarray(values))
    cdf = np.array([NormalDist().cdf(v) for v in x])
    k = np.arange(1, len(x) + 1) / len(x)
    return float(max(np.max(k - cdf), np.max(cdf - (k - 1 / len(x)))))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[16, 64, 256])
    parser.add_argument("--d", type=int, nargs="+", default=[4, 16, 64])
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--scaling", choices=[s.value for s in ScalingMode], default="exact")
    parser.add_argument("--reps", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    levels = (0.5, 0.9, 0.95, 0.99)
    normal = [NormalDist().inv_cdf(p) for p in levels]
    print(f"{'n':>5} {'d':>5} " + " ".join(f"q{p:<7g}" for p in levels) + "  KS")
    print(f"{'':>5} {'N(0,1)':>5} " + " ".join(f"{q:<8.3f}" for q in normal))
    for n in args.n:
        for d in args.d:
            if d < args.m:
                continue
            cal = simulate_null(n, d, args.m, args.scaling, args.reps, levels, args.seed)
            row = " ".join(f"{q:<8.3f}" for q in cal.quantiles)
            print(f"{n:>5} {d:>5} {row}  {kolmogorov_distance(cal.values):.3f}")


if __name__ == "__main__":
    main()
