"""Compare the numba and numpy paths of the hot kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--size N]``.
Each kernel is called once for warm-up (JIT compilation), then timed with
``timeit``; the two paths are also checked to agree.
"""

import argparse
import timeit

import numpy as np

from shotnoise import _kernels as K


def cases(n, rng):
    x = rng.uniform(1e-3, 20.0, n)
    counts = rng.poisson(8.0, n // 8)
    return {
        "s2_cdf": (x, 2.0),
        "s2_levy_k": (x, 2.0),
        "s2_inverse_cdf": (rng.random(n // 10), 2.0, 1e-12),
        "mittag_leffler_neg": (rng.uniform(0.0, 2.5, n), 0.5),
        "segment_sum": (rng.random(int(counts.sum())), counts.astype(np.int64)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}{'max diff':>12}")
    for name, call_args in cases(args.size, rng).items():
        fast, slow = K.IMPLEMENTATIONS[name]
        a, b = fast(*call_args), slow(*call_args)  # warm-up and agreement
        diff = float(np.max(np.abs(a - b)))
        tf = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        ts = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<20}{1e3 * tf:>12.2f}{1e3 * ts:>12.2f}{ts / tf:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
