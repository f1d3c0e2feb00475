# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled clustering kernels: nearest-centroid assignment and exact
per-point silhouette values. Semantics match `_pykern` exactly; reduction
order matches it bit-for-bit for dimensionality below 8."""

from libc.math cimport INFINITY, sqrt

import numpy as np


def assign(double[:, ::1] points, double[:, ::1] centroids):
    """Nearest-centroid labels and squared distances; ties take the lowest index."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    sqd_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] sqd = sqd_arr
    cdef Py_ssize_t i, c, j
    cdef double best, dist2, diff
    cdef long long best_c
    for i in range(n):
        best = INFINITY
        best_c = 0
        for c in range(k):
            dist2 = 0.0
            for j in range(d):
                diff = points[i, j] - centroids[c, j]
                dist2 += diff * diff
            if dist2 < best:
                best = dist2
                best_c = c
        labels[i] = best_c
        sqd[i] = best
    return labels_arr, sqd_arr


def silhouette_samples(double[:, ::1] points, long long[::1] labels, int n_clusters):
    """Exact per-point silhouette values (Euclidean distance)."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    counts_arr = np.bincount(np.asarray(labels), minlength=n_clusters).astype(np.int64)
    out_arr = np.empty(n, dtype=np.float64)
    sums_arr = np.empty(n_clusters, dtype=np.float64)
    cdef long long[::1] counts = counts_arr
    cdef double[::1] out = out_arr
    cdef double[::1] sums = sums_arr
    cdef Py_ssize_t i, j, c
    cdef long long own
    cdef double dist2, diff, a, b, mean_c, denom
    for i in range(n):
        for c in range(n_clusters):
            sums[c] = 0.0
        for j in range(n):
            dist2 = 0.0
            for c in range(d):
                diff = points[j, c] - points[i, c]
                dist2 += diff * diff
            sums[labels[j]] += sqrt(dist2)
        own = labels[i]
        if counts[own] <= 1:
            out[i] = 0.0
            continue
        a = sums[own] / (counts[own] - 1)
        b = INFINITY
        for c in range(n_clusters):
            if c == own or counts[c] == 0:
                continue
            mean_c = sums[c] / counts[c]
            if mean_c < b:
                b = mean_c
        denom = a if a > b else b
        out[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return out_arr
