"""Pure-numpy fallback for the hot clustering kernels.

Mirrors `_ckern` operation for operation. For point dimensionality below 8
both backends perform floating-point reductions in the same order, so their
outputs are bit-identical; above that, agreement is to rounding error.
"""

from __future__ import annotations

import numpy as np


def assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid labels and squared distances; ties take the lowest index."""
    diff = points[:, None, :] - centroids[None, :, :]
    dist2 = (diff * diff).sum(axis=2)
    labels = np.argmin(dist2, axis=1).astype(np.int64)  # first minimum wins
    sqdists = dist2[np.arange(points.shape[0]), labels]
    return labels, np.ascontiguousarray(sqdists)


def silhouette_samples(
    points: np.ndarray, labels: np.ndarray, n_clusters: int
) -> np.ndarray:
    """Exact per-point silhouette values (Euclidean distance).

    Points in singleton clusters score 0, as does the degenerate case where
    both the intra and nearest-other mean distances are 0.
    """
    n = points.shape[0]
    counts = np.bincount(labels, minlength=n_clusters)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        diff = points - points[i]
        dists = np.sqrt((diff * diff).sum(axis=1))
        sums = np.bincount(labels, weights=dists, minlength=n_clusters)
        own = labels[i]
        if counts[own] <= 1:
            out[i] = 0.0
            continue
        a = sums[own] / (counts[own] - 1)  # self-distance is 0, excluded by count
        b = np.inf
        for c in range(n_clusters):
            if c == own or counts[c] == 0:
                continue
            mean_c = sums[c] / counts[c]
            if mean_c < b:
                b = mean_c
        denom = a if a > b else b
        out[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return out
