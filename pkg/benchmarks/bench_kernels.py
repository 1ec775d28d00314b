"""Compare the compiled and pure-Python kernels on identical inputs.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from robust_tails import _pykernels

try:
    from robust_tails import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _time(func, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    p = np.logspace(-12, -0.5, 2000)
    xs = np.logspace(1.2, 6, 200)
    rng = np.random.default_rng(0)
    data = np.sort(rng.pareto(2.0, 5000))
    pool = np.sort(rng.pareto(2.0, 50000))
    return {
        "solve_bx (2000 levels, hellinger 2.86)": lambda k: k.solve_bx(1, 2.86, p, 0.05),
        "solve_lower (200 levels, GPD beta=2, s=1.5)": lambda k: k.solve_lower(0.0, 1.0, 2.0, 1.0, 1.5, xs, 3.2),
        "knn_within (n=5000, k=71)": lambda k: k.knn_within(data, 71),
        "knn_cross (5000 into 50000, k=71)": lambda k: k.knn_cross(pool, data, 71),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not available; only the Python kernels can run")
    print(f"{'kernel':48s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s} {'max rel diff':>13s}")
    for name, call in cases().items():
        tp, outp = _time(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:48s} {tp:12.4f} {'-':>12s} {'-':>9s} {'-':>13s}")
            continue
        tc, outc = _time(lambda: call(_ckernels), args.repeat)
        a = np.asarray(outp[0] if isinstance(outp, tuple) else outp)
        b = np.asarray(outc[0] if isinstance(outc, tuple) else outc)
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{name:48s} {tp:12.4f} {tc:12.4f} {tp / tc:9.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
