"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the two hot loops (nearest-centroid assignment and the polygon
containment mask) on sizes typical of a clustering run and a labeling
session, checks both backends agree, and prints a comparison table.
"""

import argparse
import time

import numpy as np

from intentlab._kernels import _pykernels

try:
    from intentlab._kernels import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_assign(repeats):
    rng = np.random.default_rng(0)
    cases = [(2_000, 64, 10), (20_000, 64, 50), (50_000, 32, 150)]
    rows = []
    for n, dim, k in cases:
        points = np.ascontiguousarray(rng.normal(size=(n, dim)))
        centroids = np.ascontiguousarray(rng.normal(size=(k, dim)))
        t_py = timeit(lambda: _pykernels.assign_points(points, centroids), repeats)
        if _ckernels is not None:
            t_c = timeit(lambda: _ckernels.assign_points(points, centroids), repeats)
            l1, _ = _ckernels.assign_points(points, centroids)
            l2, _ = _pykernels.assign_points(points, centroids)
            assert np.array_equal(l1, l2), "backends disagree on assignments"
        else:
            t_c = float("nan")
        rows.append((f"assign {n}x{dim}, k={k}", t_py, t_c))
    return rows


def bench_polygon(repeats):
    rng = np.random.default_rng(1)
    cases = [(10_000, 8), (100_000, 16)]
    rows = []
    for n, verts in cases:
        points = np.ascontiguousarray(rng.uniform(-2, 2, size=(n, 2)))
        raw = rng.uniform(-1.5, 1.5, size=(verts, 2))
        center = raw.mean(axis=0)
        order = np.argsort(np.arctan2(raw[:, 1] - center[1], raw[:, 0] - center[0]))
        poly = np.ascontiguousarray(raw[order])
        t_py = timeit(lambda: _pykernels.polygon_mask(points, poly), repeats)
        if _ckernels is not None:
            t_c = timeit(lambda: _ckernels.polygon_mask(points, poly), repeats)
            m1 = _ckernels.polygon_mask(points, poly)
            m2 = _pykernels.polygon_mask(points, poly)
            assert np.array_equal(m1, m2), "backends disagree on containment"
        else:
            t_c = float("nan")
        rows.append((f"polygon {n} pts, {verts} verts", t_py, t_c))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels not built; timing the fallback only")
    rows = bench_assign(args.repeats) + bench_polygon(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'case'.ljust(width)}  {'python':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, t_py, t_c in rows:
        speed = t_py / t_c if t_c == t_c and t_c > 0 else float("nan")
        print(
            f"{name.ljust(width)}  {t_py * 1e3:>8.2f}ms  {t_c * 1e3:>8.2f}ms  {speed:>7.1f}x"
        )


if __name__ == "__main__":
    main()
