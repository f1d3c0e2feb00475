"""k-means clustering with silhouette-driven selection of k.

All randomness flows through numpy Generators seeded from explicit integer
tuples, so identical inputs and seeds reproduce identical results bit for
bit regardless of how restarts or sweep values are scheduled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError

MAX_ITER = 300
DEFAULT_RESTARTS = 10
DEFAULT_SILHOUETTE_CAP = 20_000
_SILHOUETTE_SALT = 0x51

# hook(restart_index, iteration, inertia) called after every assignment step
IterationHook = Callable[[int, int, float], None]


@dataclass
class KMeansResult:
    k: int
    centroids: np.ndarray  # (k, d)
    labels: np.ndarray  # (n,) int64 in [0, k)
    inertia: float
    iterations: int
    seed: int
    restarts: int


@dataclass
class SweepRow:
    k: int
    avg_silhouette: float
    inertia: float
    result: KMeansResult


@dataclass
class SweepTable:
    rows: list[SweepRow]
    chosen_k: int
    mode: str  # "auto" or "override"

    def row_for(self, k: int) -> SweepRow:
        for row in self.rows:
            if row.k == k:
                return row
        raise KeyError(k)


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DataError("points must be a non-empty 2-D array")
    return pts


def _count_distinct(points: np.ndarray) -> int:
    return np.unique(points, axis=0).shape[0]


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy distance-weighted (k-means++ style) initialization.

    Each new center is the best of a few candidates sampled proportionally
    to squared distance from the chosen centers, where best means lowest
    resulting total potential.
    """
    n = points.shape[0]
    n_candidates = 2 + int(math.log(k))
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[int(rng.integers(n))]
    diff = points - centroids[0]
    closest = (diff * diff).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        # total > 0 while fewer centers than distinct points exist
        candidates = rng.choice(n, size=n_candidates, p=closest / total)
        best_pot = np.inf
        best_closest = closest
        best_j = int(candidates[0])
        for j in candidates:
            diff = points - points[int(j)]
            cand_closest = np.minimum(closest, (diff * diff).sum(axis=1))
            pot = cand_closest.sum()
            if pot < best_pot:
                best_pot = pot
                best_closest = cand_closest
                best_j = int(j)
        centroids[c] = points[best_j]
        closest = best_closest
    return centroids


def _lloyd(
    points: np.ndarray,
    centroids: np.ndarray,
    k: int,
    restart: int,
    hook: IterationHook | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    n, d = points.shape
    prev_labels = None
    iterations = 0
    for it in range(1, MAX_ITER + 1):
        iterations = it
        labels, sqd = _kernels.assign(points, centroids)

        # Re-seed emptied clusters with the point farthest from its centroid.
        while True:
            counts = np.bincount(labels, minlength=k)
            empty = np.flatnonzero(counts == 0)
            if empty.size == 0:
                break
            c = int(empty[0])
            j = int(np.argmax(sqd))
            labels[j] = c
            sqd[j] = 0.0
            centroids[c] = points[j]

        if hook is not None:
            hook(restart, it, float(sqd.sum()))
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        if it == MAX_ITER:
            break
        sums = np.empty((k, d), dtype=np.float64)
        for dim in range(d):
            sums[:, dim] = np.bincount(labels, weights=points[:, dim], minlength=k)
        centroids = sums / counts[:, None]
        prev_labels = labels
    return labels, sqd, centroids, iterations


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    restarts: int = DEFAULT_RESTARTS,
    iteration_hook: IterationHook | None = None,
) -> KMeansResult:
    """Lloyd's algorithm with greedy k-means++ seeding and restarts.

    Runs `restarts` independent seedings and keeps the lowest-inertia result
    (earliest restart wins ties). Convergence is unchanged assignments or
    300 iterations; assignment distance ties break toward the lowest cluster
    index; an emptied cluster is re-seeded with the point farthest from its
    assigned centroid.
    """
    pts = _as_points(points)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    distinct = _count_distinct(pts)
    if k > distinct:
        raise ConfigError(
            f"k ({k}) exceeds the number of distinct points ({distinct})"
        )

    best: tuple[float, np.ndarray, np.ndarray, int] | None = None
    for r in range(restarts):
        rng = np.random.default_rng((seed, k, r))
        centroids = _seed_centroids(pts, k, rng)
        labels, sqd, centroids, iterations = _lloyd(
            pts, centroids, k, r, iteration_hook
        )
        inertia = float(sqd.sum())
        if best is None or inertia < best[0]:
            best = (inertia, labels, centroids, iterations)

    inertia, labels, centroids, iterations = best
    return KMeansResult(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        iterations=iterations,
        seed=seed,
        restarts=restarts,
    )


def silhouette(
    points: np.ndarray,
    assignments: np.ndarray,
    cap: int = DEFAULT_SILHOUETTE_CAP,
    seed: int = 0,
) -> float:
    """Average silhouette over all points, in [-1, 1]. Euclidean distance.

    Exact O(n^2) computation up to `cap` points; beyond that a seeded uniform
    subsample of `cap` points is scored instead (reported via a warning).
    Singleton-cluster points contribute 0.
    """
    pts = _as_points(points)
    labels = np.ascontiguousarray(assignments, dtype=np.int64)
    if labels.shape[0] != pts.shape[0]:
        raise DataError("assignments length does not match points")
    if labels.min() < 0:
        raise DataError("cluster labels must be non-negative")
    n_clusters = int(labels.max()) + 1
    if np.unique(labels).size < 2:
        raise DataError("silhouette is undefined for a single cluster")

    if pts.shape[0] > cap:
        rng = np.random.default_rng((seed, _SILHOUETTE_SALT))
        idx = np.sort(rng.choice(pts.shape[0], size=cap, replace=False))
        pts = np.ascontiguousarray(pts[idx])
        labels = np.ascontiguousarray(labels[idx])
        warnings.warn(
            f"silhouette computed on a seeded subsample of {cap} of "
            f"{assignments.shape[0]} points",
            stacklevel=2,
        )
        if np.unique(labels).size < 2:
            raise DataError("silhouette subsample collapsed to a single cluster")

    s = _kernels.silhouette_samples(pts, labels, n_clusters)
    return float(np.mean(s))


def sweep_k(
    points: np.ndarray,
    k_min: int = 2,
    k_max: int = 10,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    override: int | None = None,
    silhouette_cap: int = DEFAULT_SILHOUETTE_CAP,
    iteration_hook: IterationHook | None = None,
) -> SweepTable:
    """Run kmeans + silhouette for each k in [k_min, k_max] and pick k.

    chosen_k is the global argmax of average silhouette over the whole range
    (ties toward smaller k), unless an override pins it; the full table is
    recorded either way. The sweep truncates with a warning when there are
    fewer distinct points than k_max.
    """
    pts = _as_points(points)
    if k_min < 2:
        raise ConfigError(f"k_min must be >= 2, got {k_min}")
    if k_max < k_min:
        raise ConfigError(f"k_max ({k_max}) must be >= k_min ({k_min})")
    distinct = _count_distinct(pts)
    k_hi = min(k_max, distinct)
    if k_hi < k_max:
        warnings.warn(
            f"sweep truncated at k={k_hi}: only {distinct} distinct points",
            stacklevel=2,
        )
    if k_hi < k_min:
        raise DataError(
            f"cannot sweep k >= {k_min} with only {distinct} distinct points"
        )
    if override is not None and not k_min <= override <= k_hi:
        raise ConfigError(
            f"k override ({override}) outside the feasible sweep range "
            f"[{k_min}, {k_hi}]"
        )

    rows = []
    for k in range(k_min, k_hi + 1):
        result = kmeans(pts, k, seed=seed, restarts=restarts, iteration_hook=iteration_hook)
        score = silhouette(pts, result.labels, cap=silhouette_cap, seed=seed)
        rows.append(SweepRow(k=k, avg_silhouette=score, inertia=result.inertia, result=result))

    if override is not None:
        return SweepTable(rows=rows, chosen_k=override, mode="override")
    best = rows[0]
    for row in rows[1:]:
        if row.avg_silhouette > best.avg_silhouette:
            best = row
    return SweepTable(rows=rows, chosen_k=best.k, mode="auto")
