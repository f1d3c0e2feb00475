"""Aggregate selected events into per-session numeric features by category."""

from __future__ import annotations

import csv
import io
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import ConfigError, DataError
from .events import CATEGORIES, Session
from .ingest import WindowConfig, segment_windows

AGGREGATORS = ("count", "sum_payload_field", "session_duration")


@dataclass(frozen=True)
class FeatureSpec:
    """Declarative rule mapping event names to one named numeric feature.

    `first_windows=None` aggregates over the whole session; an integer n
    aggregates over the union of the first n time windows, counting each
    event once even when it falls in two overlapping windows.
    """

    name: str
    category: str
    match: frozenset[str] = frozenset()
    aggregator: str = "count"
    payload_field: str | None = None
    first_windows: int | None = None

    def validate(self, window_count: int) -> None:
        if not self.name:
            raise ConfigError("feature name must be non-empty")
        if self.category not in CATEGORIES:
            raise ConfigError(
                f"feature {self.name!r}: unknown category {self.category!r} "
                f"(expected one of {list(CATEGORIES)})"
            )
        if self.aggregator not in AGGREGATORS:
            raise ConfigError(
                f"feature {self.name!r}: unknown aggregator {self.aggregator!r}"
            )
        if self.aggregator == "sum_payload_field" and not self.payload_field:
            raise ConfigError(
                f"feature {self.name!r}: sum_payload_field requires payload_field"
            )
        if self.aggregator == "session_duration" and self.first_windows is not None:
            raise ConfigError(
                f"feature {self.name!r}: session_duration is only valid with "
                "whole-session scope"
            )
        if self.first_windows is not None and not (
            1 <= self.first_windows <= window_count
        ):
            raise ConfigError(
                f"feature {self.name!r}: first_windows ({self.first_windows}) must be "
                f"between 1 and window.count ({window_count})"
            )


@dataclass
class FeatureMatrix:
    """Dense session-by-feature matrix for one event category."""

    category: str
    feature_names: list[str]
    session_ids: list[str]
    values: np.ndarray  # shape (len(session_ids), len(feature_names)), float64

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def take_rows(self, indices: Iterable[int]) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix(
            category=self.category,
            feature_names=list(self.feature_names),
            session_ids=[self.session_ids[i] for i in idx],
            values=self.values[idx].copy() if idx else np.empty((0, len(self.feature_names))),
        )

    def to_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["session_id"] + self.feature_names)
        for sid, row in zip(self.session_ids, self.values):
            writer.writerow([sid] + [repr(float(v)) for v in row])

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, fh: IO[str], category: str) -> "FeatureMatrix":
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "session_id":
            raise DataError(f"feature CSV for {category}: missing session_id header")
        names = header[1:]
        ids, rows = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
        values = np.asarray(rows, dtype=np.float64)
        if values.size == 0:
            values = np.empty((0, len(names)))
        return cls(category=category, feature_names=names, session_ids=ids, values=values)


@dataclass(frozen=True)
class PayloadIssue:
    """Non-numeric payload value encountered while summing a feature."""

    session_id: str
    feature: str
    event_name: str
    value: str


@dataclass
class _SessionIndex:
    session: Session
    offsets: list[float]
    window_ends: list[float] = field(default_factory=list)

    def in_first_windows(self, n: int) -> list:
        # Consecutive windows overlap, so the union of the first n produced
        # windows is the single interval [0, end of the last one).
        m = min(n, len(self.window_ends))
        hi = bisect_left(self.offsets, self.window_ends[m - 1])
        return self.session.events[:hi]


def validate_specs(specs: list[FeatureSpec], window_count: int) -> None:
    if not specs:
        raise ConfigError("features list must be non-empty")
    seen = set()
    for spec in specs:
        spec.validate(window_count)
        if spec.name in seen:
            raise ConfigError(f"duplicate feature name {spec.name!r}")
        seen.add(spec.name)


def _aggregate(
    spec: FeatureSpec, index: _SessionIndex, issues: list[PayloadIssue]
) -> float:
    if spec.aggregator == "session_duration":
        return index.session.duration
    events = (
        index.session.events
        if spec.first_windows is None
        else index.in_first_windows(spec.first_windows)
    )
    if spec.aggregator == "count":
        return float(sum(1 for e in events if e.name in spec.match))
    total = 0.0
    for e in events:
        if e.name not in spec.match or spec.payload_field not in e.payload:
            continue
        v = e.payload[spec.payload_field]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            issues.append(
                PayloadIssue(index.session.id, spec.name, e.name, repr(v))
            )
            continue
        total += float(v)
    return total


def extract_features(
    sessions: list[Session],
    specs: list[FeatureSpec],
    window_cfg: WindowConfig,
) -> tuple[dict[str, FeatureMatrix], list[PayloadIssue]]:
    """Build one FeatureMatrix per category that has at least one spec.

    Every session appears as a row (sorted by session id) in every produced
    matrix. Event names absent from the data yield zero counts. Returns the
    matrices plus any payload issues hit while summing payload fields.
    """
    window_cfg.validate()
    validate_specs(specs, window_cfg.count)

    by_category: dict[str, list[FeatureSpec]] = {}
    for spec in specs:
        by_category.setdefault(spec.category, []).append(spec)

    ordered = sorted(sessions, key=lambda s: s.id)
    issues: list[PayloadIssue] = []

    indexes = []
    for session in ordered:
        windows = segment_windows(
            session, window_cfg.width, window_cfg.overlap, window_cfg.count
        )
        indexes.append(
            _SessionIndex(
                session=session,
                offsets=[e.time_offset for e in session.events],
                window_ends=[w.end for w in windows],
            )
        )

    matrices = {}
    for category in CATEGORIES:
        cat_specs = by_category.get(category)
        if not cat_specs:
            continue
        values = np.empty((len(ordered), len(cat_specs)), dtype=np.float64)
        for i, index in enumerate(indexes):
            for j, spec in enumerate(cat_specs):
                values[i, j] = _aggregate(spec, index, issues)
        matrices[category] = FeatureMatrix(
            category=category,
            feature_names=[s.name for s in cat_specs],
            session_ids=[s.id for s in ordered],
            values=values,
        )
    return matrices, issues
