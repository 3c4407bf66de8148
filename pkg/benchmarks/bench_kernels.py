"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--rows N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from sdckit import _kernels_py

try:
    from sdckit import _kernels
except ImportError:
    _kernels = None


def make_inputs(n, num_cols, cat_cols, levels, seed=0):
    rng = np.random.default_rng(seed)
    num = rng.random((n, num_cols))
    codes = rng.integers(0, levels, (n, cat_cols)).astype(np.intp)
    tables = rng.random((cat_cols, levels, levels))
    tables = (tables + tables.transpose(0, 2, 1)) / 2
    for t in tables:
        np.fill_diagonal(t, 0.0)
    masked = np.clip(num + rng.normal(0, 0.01, num.shape), 0, 1)
    return num, codes, tables, masked


def bench(mod, inputs, repeat):
    num, codes, tables, masked = inputs
    p, pc = num[0].copy(), codes[0].copy()
    t_sq = min(timeit.repeat(lambda: mod.sq_dists(num, codes, tables, p, pc), number=50, repeat=repeat)) / 50
    t_link = min(timeit.repeat(lambda: mod.linkage(num, codes, masked, codes, tables, 1e-9),
                               number=1, repeat=repeat))
    return t_sq, t_link


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    inputs = make_inputs(args.rows, 4, 2, 12)
    ref = _kernels_py.linkage(inputs[0], inputs[1], inputs[3], inputs[1], inputs[2], 1e-9)
    print(f"rows={args.rows}")
    print(f"{'backend':<8} {'sq_dists (ms)':>14} {'linkage (s)':>12}")
    for name, mod in (("python", _kernels_py), ("cython", _kernels)):
        if mod is None:
            print(f"{name:<8} {'not built':>14}")
            continue
        out = mod.linkage(inputs[0], inputs[1], inputs[3], inputs[1], inputs[2], 1e-9)
        assert all(np.array_equal(a, b) for a, b in zip(out, ref)), "backends disagree"
        t_sq, t_link = bench(mod, inputs, args.repeat)
        print(f"{name:<8} {t_sq * 1e3:>14.3f} {t_link:>12.3f}")


if __name__ == "__main__":
    main()
