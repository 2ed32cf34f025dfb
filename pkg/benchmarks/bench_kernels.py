"""Time the numba kernels against their pure-Python / numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 256]

The fallbacks are what runs under ODTQC_DISABLE_JIT=1. Each case also checks
that both paths return identical arrays.
"""
import argparse
import timeit

import numpy as np

from odtqc import kernels
from odtqc._jit import USE_NUMBA


def cases(size, rng):
    ramp = np.add.outer(np.linspace(0, 40, size), np.linspace(0, 25, size))
    wrapped = np.angle(np.exp(1j * ramp))
    quality = rng.random((size, size))
    seed = size * size // 2 + size // 2
    yield ("unwrap_flood", (wrapped, quality, seed),
           kernels.unwrap_flood_nb, kernels.unwrap_flood_py)

    n = 64 ** 3
    index = rng.integers(0, n, size=71 * size * size // 4)
    values = rng.normal(size=index.size) + 1j * rng.normal(size=index.size)

    def dep(fn):
        def run(index, values):
            acc, hits = np.zeros(n, complex), np.zeros(n, np.int64)
            fn(acc, hits, index, values)
            return acc, hits
        return run
    yield "deposit", (index, values), dep(kernels.deposit_nb), dep(kernels.deposit_py)

    x = rng.normal(size=(32, 8, size // 2, size // 2))
    yield "maxpool2", (x,), kernels.maxpool2_nb, kernels.maxpool2_py

    img = rng.normal(size=(1, size, size))
    yy, xx = np.meshgrid(np.arange(size) + 0.3, np.arange(size) - 0.2, indexing="ij")
    yield "bilinear_sample", (img, yy, xx), kernels.bilinear_sample_nb, kernels.bilinear_sample_py


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=256)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled or missing; the 'numba' column runs the fallback too")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numba ms':>12}{'fallback ms':>14}{'speed-up':>10}  equal")
    for name, inputs, fast, slow in cases(args.size, rng):
        ref = fast(*inputs)  # compile outside the timed region
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<18}{1e3 * t_fast:>12.2f}{1e3 * t_slow:>14.2f}{t_slow / t_fast:>10.1f}  "
              f"{same(ref, slow(*inputs))}")


if __name__ == "__main__":
    main()
