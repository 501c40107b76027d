# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: nearest-centroid assignment and polygon tests.

Semantics must match _pykernels exactly: ties in the centroid argmin go
to the lowest index, and the polygon rule is even-odd with boundary
points counted inside.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def assign_points(double[:, ::1] points, double[:, ::1] centroids):
    """Assign each point to its nearest centroid (squared Euclidean)."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    sqdists_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] sqdists = sqdists_arr
    cdef Py_ssize_t i, j, d
    cdef double best, acc, diff
    cdef Py_ssize_t best_j
    with nogil:
        for i in range(n):
            best = -1.0
            best_j = 0
            for j in range(k):
                acc = 0.0
                for d in range(dim):
                    diff = points[i, d] - centroids[j, d]
                    acc += diff * diff
                if best < 0.0 or acc < best:
                    best = acc
                    best_j = j
            labels[i] = best_j
            sqdists[i] = best
    return labels_arr, sqdists_arr


def polygon_mask(double[:, ::1] points, double[:, ::1] vertices):
    """Even-odd point-in-polygon test with boundary points inside."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t v = vertices.shape[0]
    mask_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] mask = mask_arr
    cdef Py_ssize_t i, a, b
    cdef double px, py, x1, y1, x2, y2, cross, xhit
    cdef bint inside, on_boundary
    with nogil:
        for i in range(n):
            px = points[i, 0]
            py = points[i, 1]
            inside = False
            on_boundary = False
            for a in range(v):
                b = a + 1
                if b == v:
                    b = 0
                x1 = vertices[a, 0]
                y1 = vertices[a, 1]
                x2 = vertices[b, 0]
                y2 = vertices[b, 1]
                cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                if cross == 0.0:
                    if (px >= min(x1, x2) and px <= max(x1, x2)
                            and py >= min(y1, y2) and py <= max(y1, y2)):
                        on_boundary = True
                        break
                if (y1 > py) != (y2 > py):
                    xhit = (x2 - x1) * (py - y1) / (y2 - y1) + x1
                    if px < xhit:
                        inside = not inside
            mask[i] = 1 if (inside or on_boundary) else 0
    return mask_arr.astype(bool)
