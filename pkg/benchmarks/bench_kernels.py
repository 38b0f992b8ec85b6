"""Compare the compiled and pure-Python geometric kernels.

Usage: python3 benchmarks/bench_kernels.py [--sizes 1000 10000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spheresep import _pykernels

try:
    from spheresep import _ckernels
except ImportError:
    _ckernels = None


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, rng):
    pts = rng.standard_normal((n, 3))
    normals = rng.standard_normal((max(n // 10, 1), 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offsets = rng.standard_normal(len(normals)) * 0.1
    centers = rng.uniform(0, 50, (n, 2))
    radii = np.full(n, 0.6)
    queries = rng.uniform(0, 50, (200, 2))
    return {
        "halfspace_counts": lambda m: m.halfspace_counts(pts, normals, offsets, 1e-12),
        "classify_spheres": lambda m: m.classify_spheres(centers, radii, False,
                                                         np.array([25.0, 25.0]), 10.0, 1e-12),
        "coverage_counts": lambda m: m.coverage_counts(queries, centers, radii, 1e-9),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'n':>7} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for n in args.sizes:
        for name, call in cases(n, rng).items():
            tp = _best_of(lambda: call(_pykernels), args.repeat)
            if _ckernels is None:
                print(f"{name:<18} {n:>7} {tp * 1e3:>12.3f} {'-':>12} {'-':>8}")
                continue
            a, b = call(_pykernels), call(_ckernels)
            for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
                assert np.array_equal(np.asarray(x), np.asarray(y)), f"{name}: backends disagree"
            tc = _best_of(lambda: call(_ckernels), args.repeat)
            print(f"{name:<18} {n:>7} {tp * 1e3:>12.3f} {tc * 1e3:>12.3f} {tp / tc:>8.1f}")


if __name__ == "__main__":
    main()
