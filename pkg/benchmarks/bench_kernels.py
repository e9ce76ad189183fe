"""Benchmark the hot kernels: numba JIT vs pure numpy.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The same comparison applies to full runs: set SOCSIM_NO_NUMBA=1 to force
the numpy path in any simulation.
"""

import argparse
import time

import numpy as np

from socsim import _kernels


def time_call(fn, args, repeat):
    fn(*args)  # warmup (JIT compile)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_pairwise(repeat):
    print(f"{'pairwise_features':<22}{'m':>6}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    rng = np.random.default_rng(0)
    for m in (8, 16, 32, 64, 128, 256):
        pos = rng.uniform(0, 50, size=(m, 2))
        ang = rng.uniform(0, 2 * np.pi, size=m)
        t_np = time_call(_kernels.pairwise_features_numpy, (pos, ang), repeat)
        t_nb = time_call(_kernels.pairwise_features_numba, (pos, ang), repeat)
        print(f"{'':<22}{m:>6}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>8.1f}x")


def bench_force(repeat):
    print(f"{'force_step':<22}{'m':>6}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    rng = np.random.default_rng(1)
    center = np.array([25.0, 25.0])
    for m in (2, 4, 8, 16, 32):
        pos = rng.uniform(20, 30, size=(m, 2))
        args = (pos, center, 1.0, 0.5, 0.01, 0.7, 0.05)
        t_np = time_call(_kernels.force_step_numpy, args, repeat)
        t_nb = time_call(_kernels.force_step_numba, args, repeat)
        print(f"{'':<22}{m:>6}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>8.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; both columns use the numpy path")
    bench_pairwise(args.repeat)
    print()
    bench_force(args.repeat)


if __name__ == "__main__":
    main()
