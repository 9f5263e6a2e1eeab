"""Time the pairwise Pearson kernel for each available backend.

Usage: python3 benchmarks/bench_pearson.py [--assets N] [--dates T] [--missing F] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from corrnet import kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--assets", type=int, default=500)
    ap.add_argument("--dates", type=int, default=250)
    ap.add_argument("--missing", type=float, default=0.02, help="fraction of NaN cells")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.standard_normal((args.dates, args.assets))
    x[rng.random(x.shape) < args.missing] = np.nan

    results = {}
    for name, impl in sorted(kernels.backends().items()):
        best = min(timeit.repeat(lambda: impl.pairwise_pearson(x), number=1, repeat=args.repeat))
        results[name] = (best, impl.pairwise_pearson(x)[0])
        print(f"{name:8s} {best * 1e3:10.1f} ms  ({args.assets} assets x {args.dates} dates)")
    if len(results) == 2:
        (_, (ta, ra)), (_, (tb, rb)) = sorted(results.items())
        diff = np.nanmax(np.abs(ra - rb))
        print(f"cython is {tb / ta:.2f}x faster than python; max |diff| = {diff:.3g}")
    print(f"default backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
