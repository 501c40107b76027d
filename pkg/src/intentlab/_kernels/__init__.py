"""Kernel backend dispatch.

The compiled extension is preferred when importable; the pure-numpy
module is the fallback. INTENTLAB_PURE_PYTHON=1 forces the fallback,
which benchmarks/bench_kernels.py uses to compare the two.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("INTENTLAB_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass


def assign_points(points, centroids):
    """Nearest centroid per point: (labels, squared distances)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    return _impl.assign_points(points, centroids)


def polygon_mask(points, vertices):
    """Boundary-inclusive even-odd containment mask for 2D points."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    return _impl.polygon_mask(points, vertices)


__all__ = ["BACKEND", "assign_points", "polygon_mask"]
