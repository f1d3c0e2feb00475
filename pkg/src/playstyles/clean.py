"""Session filtering, outlier removal, and clustering-ready transforms.

The per-category pipeline order is fixed: validity filter -> outlier
removal (raw values, single pass) -> log transform of right-tailed columns
-> standardize -> PCA with scree-knee dimension selection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .events import CATEGORIES
from .features import FeatureMatrix

ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CleaningRules:
    """Validity band, outlier policy, and transform thresholds."""

    min_duration: float = 300.0
    max_duration: float = 2700.0
    min_action_events: int = 10
    outlier_sigma: float = 3.0  # math.inf disables outlier removal
    skew_threshold: float = 2.0
    outlier_categories: tuple[str, ...] = ("Action", "Feedback")

    def validate(self) -> None:
        if self.min_duration >= self.max_duration:
            raise ConfigError(
                f"cleaning.min_duration_seconds ({self.min_duration}) must be below "
                f"cleaning.max_duration_seconds ({self.max_duration})"
            )
        if not self.outlier_sigma > 0:
            raise ConfigError(
                f"cleaning.outlier_sigma must be > 0, got {self.outlier_sigma}"
            )
        for cat in self.outlier_categories:
            if cat not in CATEGORIES:
                raise ConfigError(
                    f"cleaning.outlier_categories: unknown category {cat!r}"
                )


@dataclass
class RemovedSession:
    session_id: str
    reasons: list[str]


@dataclass
class TransformRecord:
    """Everything needed to audit or replay one category's transform."""

    category: str
    feature_names: list[str]
    log_applied: list[bool]
    means: list[float]
    stds: list[float]
    dropped_features: list[str]
    components: np.ndarray  # rows are orthonormal principal directions
    explained_variance: list[float]
    chosen_dims: int
    selection_mode: str  # "knee" or "override"

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "feature_names": self.feature_names,
            "log_applied": self.log_applied,
            "means": self.means,
            "stds": self.stds,
            "dropped_zero_variance": self.dropped_features,
            "pca": {
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance,
                "chosen_dims": self.chosen_dims,
                "selection_mode": self.selection_mode,
            },
        }


def filter_sessions(
    matrices: dict[str, FeatureMatrix],
    durations: dict[str, float],
    action_counts: dict[str, int],
    rules: CleaningRules,
) -> tuple[dict[str, FeatureMatrix], list[RemovedSession]]:
    """Drop sessions outside the duration band or below the action floor.

    Applied identically to every category matrix; the removal list covers
    each distinct dropped session once, with all reasons that applied.
    """
    rules.validate()
    removed: dict[str, list[str]] = {}

    def keep(sid: str) -> bool:
        reasons = []
        duration = durations[sid]
        if duration < rules.min_duration:
            reasons.append(f"duration {duration:g}s < {rules.min_duration:g}s")
        if duration > rules.max_duration:
            reasons.append(f"duration {duration:g}s > {rules.max_duration:g}s")
        if action_counts[sid] < rules.min_action_events:
            reasons.append(
                f"action events {action_counts[sid]} < {rules.min_action_events}"
            )
        if reasons:
            removed.setdefault(sid, reasons)
            return False
        return True

    filtered = {}
    for category, matrix in matrices.items():
        idx = [i for i, sid in enumerate(matrix.session_ids) if keep(sid)]
        filtered[category] = matrix.take_rows(idx)
        if not idx:
            warnings.warn(
                f"category {category}: no sessions survived the validity filter",
                stacklevel=2,
            )
    removals = [RemovedSession(sid, reasons) for sid, reasons in sorted(removed.items())]
    return filtered, removals


def remove_outliers(
    matrix: FeatureMatrix, sigma: float
) -> tuple[FeatureMatrix, list[RemovedSession]]:
    """Single pass: drop rows with any value >= sigma population-SDs from its
    column mean. Statistics come from the input matrix and are not recomputed
    after removals. Zero-variance columns produce no outliers.
    """
    if not sigma > 0:
        raise ConfigError(f"outlier sigma must be > 0, got {sigma}")
    if math.isinf(sigma) or matrix.values.shape[0] < 2:
        return matrix, []

    values = matrix.values
    mean = values.mean(axis=0)
    std = values.std(axis=0)  # population SD: the batch is the population
    cutoff = sigma * std
    flags = np.abs(values - mean) >= cutoff
    flags[:, std == 0.0] = False

    removed = []
    keep_idx = []
    for i, row_flags in enumerate(flags):
        if row_flags.any():
            names = [matrix.feature_names[j] for j in np.flatnonzero(row_flags)]
            removed.append(
                RemovedSession(
                    matrix.session_ids[i],
                    [f"outlier (>= {sigma:g} SD) on {', '.join(names)}"],
                )
            )
        else:
            keep_idx.append(i)
    return matrix.take_rows(keep_idx), removed


def sample_skewness(column: np.ndarray) -> float:
    """Adjusted Fisher-Pearson skewness; 0.0 for n < 3 or zero variance."""
    x = np.asarray(column, dtype=np.float64)
    n = x.size
    if n < 3:
        return 0.0
    mean = x.mean()
    m2 = ((x - mean) ** 2).mean()
    if m2 == 0.0:
        return 0.0
    m3 = ((x - mean) ** 3).mean()
    g1 = m3 / m2**1.5
    return float(g1 * math.sqrt(n * (n - 1)) / (n - 2))


def detect_right_tailed(column: np.ndarray, skew_threshold: float) -> bool:
    """True iff the column's sample skewness exceeds the threshold."""
    if len(column) == 0:
        raise DataError("cannot test skewness of an empty column")
    return sample_skewness(column) > skew_threshold


def log_transform(column: np.ndarray, feature_name: str = "") -> np.ndarray:
    """Elementwise log(1 + x); order-preserving on non-negative input."""
    x = np.asarray(column, dtype=np.float64)
    if (x < 0).any():
        label = f" {feature_name!r}" if feature_name else ""
        raise DataError(f"log transform of feature{label}: negative values present")
    return np.log1p(x)


@dataclass
class StandardizeStats:
    means: list[float]
    stds: list[float]  # sample SD (ddof=1) of each retained column
    dropped: list[str] = field(default_factory=list)


def standardize(matrix: FeatureMatrix) -> tuple[FeatureMatrix, StandardizeStats]:
    """Center and scale to unit sample SD, dropping zero-variance columns."""
    values = matrix.values
    if values.shape[0] < 2:
        raise DataError(
            f"category {matrix.category}: need at least 2 sessions to standardize, "
            f"have {values.shape[0]}"
        )
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    keep = std > 0.0
    dropped = [n for n, k in zip(matrix.feature_names, keep) if not k]
    if not keep.any():
        raise DataError(
            f"category {matrix.category}: every feature has zero variance; "
            "nothing to cluster"
        )
    z = (values[:, keep] - mean[keep]) / std[keep]
    out = FeatureMatrix(
        category=matrix.category,
        feature_names=[n for n, k in zip(matrix.feature_names, keep) if k],
        session_ids=list(matrix.session_ids),
        values=z,
    )
    stats = StandardizeStats(
        means=[float(m) for m in mean[keep]],
        stds=[float(s) for s in std[keep]],
        dropped=dropped,
    )
    return out, stats


def pca_fit(matrix: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the sample covariance matrix.

    Returns (components, explained_variance): component rows are eigenvectors
    ordered by non-increasing eigenvalue, with the sign convention that each
    row's largest-magnitude entry is positive.
    """
    values = matrix.values
    if values.shape[0] < 2:
        raise DataError(
            f"category {matrix.category}: need at least 2 sessions for PCA"
        )
    cov = np.atleast_2d(np.cov(values, rowvar=False, ddof=1))
    try:
        evals, evecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"PCA eigendecomposition failed: {exc}") from exc
    order = np.argsort(evals)[::-1]
    components = evecs[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return components, evals[order]


def select_knee(explained_variances: np.ndarray, override: int | None = None) -> int:
    """Pick the number of PCA dimensions to retain.

    With an override, return it unchanged. Otherwise locate the scree bend as
    the point of maximum perpendicular distance to the chord joining the first
    and last scree points, and retain the components before it (at least 1).
    Ties break toward fewer dimensions.
    """
    ev = np.asarray(explained_variances, dtype=np.float64)
    m = ev.size
    if m == 0:
        raise ConfigError("explained variance list must be non-empty")
    if override is not None:
        if not 1 <= override <= m:
            raise ConfigError(
                f"pca dims override ({override}) exceeds available components ({m})"
            )
        return override
    if m <= 2:
        return 1
    x = np.arange(1, m + 1, dtype=np.float64)
    dx, dy = x[-1] - x[0], ev[-1] - ev[0]
    # |cross product| is proportional to point-to-chord distance.
    dist = np.abs(dx * (ev - ev[0]) - dy * (x - x[0]))
    bend = int(np.argmax(dist)) + 1  # first max wins: ties toward fewer dims
    return max(1, bend - 1)


def project(matrix: FeatureMatrix, record: TransformRecord) -> np.ndarray:
    """Project standardized rows onto the first `chosen_dims` components."""
    if matrix.values.shape[1] != record.components.shape[1]:
        raise ConfigError(
            f"projection width mismatch: matrix has {matrix.values.shape[1]} "
            f"columns, components expect {record.components.shape[1]}"
        )
    return matrix.values @ record.components[: record.chosen_dims].T


@dataclass
class CategoryTransformResult:
    """Output bundle of `transform_category` for one event category."""

    clean_matrix: FeatureMatrix  # post-outlier, pre-transform raw values
    reduced: np.ndarray  # (sessions, chosen_dims) PCA projection
    record: TransformRecord
    outliers_removed: list[RemovedSession]


def transform_category(
    matrix: FeatureMatrix,
    rules: CleaningRules,
    pca_override: int | None = None,
) -> CategoryTransformResult:
    """Run the fixed post-filter transform chain for one category."""
    rules.validate()
    if matrix.category in rules.outlier_categories:
        cleaned, outliers = remove_outliers(matrix, rules.outlier_sigma)
    else:
        cleaned, outliers = matrix, []
    if cleaned.values.shape[0] < 2:
        raise DataError(
            f"category {matrix.category}: fewer than 2 sessions left after cleaning"
        )

    transformed = cleaned.values.copy()
    log_flags = []
    for j, name in enumerate(cleaned.feature_names):
        flag = detect_right_tailed(transformed[:, j], rules.skew_threshold)
        if flag:
            transformed[:, j] = log_transform(transformed[:, j], name)
        log_flags.append(flag)

    working = FeatureMatrix(
        category=cleaned.category,
        feature_names=list(cleaned.feature_names),
        session_ids=list(cleaned.session_ids),
        values=transformed,
    )
    standardized, stats = standardize(working)
    components, explained = pca_fit(standardized)
    chosen = select_knee(explained, pca_override)
    retained = set(standardized.feature_names)
    record = TransformRecord(
        category=cleaned.category,
        feature_names=list(standardized.feature_names),
        log_applied=[
            f for f, n in zip(log_flags, cleaned.feature_names) if n in retained
        ],
        means=stats.means,
        stds=stats.stds,
        dropped_features=stats.dropped,
        components=components,
        explained_variance=[float(v) for v in explained],
        chosen_dims=chosen,
        selection_mode="override" if pca_override is not None else "knee",
    )
    reduced = project(standardized, record)
    return CategoryTransformResult(
        clean_matrix=cleaned,
        reduced=reduced,
        record=record,
        outliers_removed=outliers,
    )
