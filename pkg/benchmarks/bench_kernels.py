#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from hodw.backend import get_kernels


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 7
    try:
        compiled = get_kernels("compiled")
    except RuntimeError:
        print("compiled kernels unavailable; build the extension first")
        return 1
    python = get_kernels("python")

    rng = np.random.default_rng(0)
    img = np.ascontiguousarray(rng.uniform(0, 255, size=(96, 96, 3)))
    rows = np.sort(rng.integers(0, 89, size=(529, 60)).astype(np.int64))
    cols = np.sort(rng.integers(0, 89, size=(529, 60)).astype(np.int64))
    tens = rng.normal(size=(529, 8, 8, 3, 60))
    fwht_batch = rng.normal(size=(3, 16384))

    cases = [
        ("fwht 3x16384", lambda k: k.fwht_inplace(fwht_batch.copy())),
        ("ssd_window 41x41", lambda k: k.ssd_window(img, 40, 40, 20, 61, 20, 61, 8)),
        ("gather 529 groups", lambda k: k.gather_groups(img, rows, cols, 8)),
        ("scatter 529 groups",
         lambda k: k.scatter_groups(np.zeros((96, 96, 3)), np.zeros((96, 96, 3)),
                                    rows, cols, tens)),
    ]

    print(f"{'kernel':<20} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, fn in cases:
        tp = timeit(lambda: fn(python), repeats)
        tc = timeit(lambda: fn(compiled), repeats)
        print(f"{name:<20} {tp * 1e3:>10.2f}ms {tc * 1e3:>10.2f}ms "
              f"{tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
