"""Pure-numpy implementations of the hot kernels.

Import-time fallback used when the compiled extension is unavailable
(or when INTENTLAB_PURE_PYTHON is set). Must agree with the compiled
kernels: nearest-centroid ties break to the lowest centroid index, and
the polygon test is even-odd with boundary points counted inside.
"""

import numpy as np

# Cap on the size of the point-by-centroid distance block held in memory.
_CHUNK_BUDGET = 2**22


def assign_points(points, centroids):
    """Assign each point to its nearest centroid (squared Euclidean).

    Returns (labels, sqdists): int64 centroid index and float64 squared
    distance per point. Ties go to the lowest centroid index, which is
    what argmin does on an exact tie.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    n = points.shape[0]
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    sqdists = np.empty(n, dtype=np.float64)
    step = max(1, _CHUNK_BUDGET // max(1, k * points.shape[1]))
    for start in range(0, n, step):
        stop = min(n, start + step)
        diff = points[start:stop, None, :] - centroids[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        labels[start:stop] = np.argmin(d2, axis=1)
        sqdists[start:stop] = d2[np.arange(stop - start), labels[start:stop]]
    return labels, sqdists


def polygon_mask(points, vertices):
    """Even-odd point-in-polygon test with boundary points inside.

    points is (n, 2), vertices is (v, 2) listing the polygon once (no
    repeated closing vertex). Returns a bool array of length n.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    px = points[:, 0]
    py = points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    boundary = np.zeros(len(points), dtype=bool)
    v = len(vertices)
    for i in range(v):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % v]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_seg = (
            (cross == 0.0)
            & (px >= min(x1, x2))
            & (px <= max(x1, x2))
            & (py >= min(y1, y2))
            & (py <= max(y1, y2))
        )
        boundary |= on_seg
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xhit = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px < xhit)
    return inside | boundary
