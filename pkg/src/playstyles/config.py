"""Pipeline configuration: JSON schema, validation, seed derivation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .clean import CleaningRules
from .errors import ConfigError
from .events import CATEGORIES
from .features import AGGREGATORS, FeatureSpec, validate_specs
from .ingest import WindowConfig
from .report import DEFAULT_RADIAL_CAP
from .simgen import Archetype, GeneratorConfig


def derive_seed(master: int, label: str) -> int:
    """Stable per-stage seed from the master seed and a stage label."""
    digest = hashlib.blake2b(
        f"{master}:{label}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _expect(obj: dict, context: str, known: set[str]) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{context} must be a JSON object")
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(
            f"{context}: unknown field(s) {', '.join(unknown)}; "
            f"expected only {', '.join(sorted(known))}"
        )


def _number(obj: dict, context: str, key: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{context}: missing required field {key}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}.{key} must be a number, got {value!r}")
    return value


def _integer(obj: dict, context: str, key: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{context}: missing required field {key}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context}.{key} must be an integer, got {value!r}")
    return value


def _string(obj: dict, context: str, key: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{context}: missing required field {key}")
        return default
    value = obj[key]
    if not isinstance(value, str):
        raise ConfigError(f"{context}.{key} must be a string, got {value!r}")
    return value


def _parse_feature(entry: dict, index: int) -> FeatureSpec:
    context = f"features[{index}]"
    _expect(
        entry,
        context,
        {"name", "category", "match", "aggregator", "payload_field", "scope"},
    )
    name = _string(entry, context, "name", required=True)
    category = _string(entry, context, "category", required=True)
    if category not in CATEGORIES:
        raise ConfigError(
            f"{context}.category: unknown category {category!r}, expected one "
            f"of {', '.join(CATEGORIES)}"
        )
    aggregator = _string(entry, context, "aggregator", default="count")
    if aggregator not in AGGREGATORS:
        raise ConfigError(
            f"{context}.aggregator: unknown aggregator {aggregator!r}, "
            f"expected one of {', '.join(AGGREGATORS)}"
        )
    match = entry.get("match", [])
    if not isinstance(match, list) or not all(isinstance(m, str) for m in match):
        raise ConfigError(f"{context}.match must be a list of event names")
    if not match and aggregator != "session_duration":
        raise ConfigError(
            f"{context}.match must be non-empty for aggregator {aggregator!r}"
        )
    payload_field = _string(entry, context, "payload_field")

    scope = entry.get("scope", "session")
    if scope == "session":
        first_windows = None
    elif isinstance(scope, dict):
        _expect(scope, f"{context}.scope", {"windows"})
        first_windows = _integer(scope, f"{context}.scope", "windows", required=True)
    else:
        raise ConfigError(
            f'{context}.scope must be "session" or {{"windows": n}}, got {scope!r}'
        )
    return FeatureSpec(
        name=name,
        category=category,
        match=frozenset(match),
        aggregator=aggregator,
        payload_field=payload_field,
        first_windows=first_windows,
    )


def _feature_to_dict(spec: FeatureSpec) -> dict:
    scope = "session" if spec.first_windows is None else {"windows": spec.first_windows}
    out: dict = {
        "name": spec.name,
        "category": spec.category,
        "match": sorted(spec.match),
        "aggregator": spec.aggregator,
        "scope": scope,
    }
    if spec.payload_field is not None:
        out["payload_field"] = spec.payload_field
    return out


@dataclass
class ClusteringConfig:
    k_min: int = 2
    k_max: int = 10
    restarts: int = 10
    k_overrides: dict[str, int] = field(default_factory=dict)
    silhouette_cap: int = 20_000

    def validate(self) -> None:
        if self.k_min < 2:
            raise ConfigError(f"clustering.k_min must be >= 2, got {self.k_min}")
        if self.k_max < self.k_min:
            raise ConfigError(
                f"clustering.k_max ({self.k_max}) must be >= k_min ({self.k_min})"
            )
        if self.restarts < 1:
            raise ConfigError("clustering.restarts must be >= 1")
        if self.silhouette_cap < 2:
            raise ConfigError("clustering.silhouette_cap must be >= 2")
        for category, k in self.k_overrides.items():
            if category not in CATEGORIES:
                raise ConfigError(
                    f"clustering.k_overrides: unknown category {category!r}"
                )
            if isinstance(k, bool) or not isinstance(k, int) or k < 2:
                raise ConfigError(
                    f"clustering.k_overrides[{category!r}] must be an integer >= 2"
                )


@dataclass
class PipelineConfig:
    input: str
    output_dir: str
    seed: int = 0
    window: WindowConfig = field(default_factory=WindowConfig)
    features: list[FeatureSpec] = field(default_factory=list)
    cleaning: CleaningRules = field(default_factory=CleaningRules)
    pca_dims: dict[str, int | None] = field(default_factory=dict)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    radial_cap_percent: float = DEFAULT_RADIAL_CAP

    def validate(self) -> None:
        if not self.input:
            raise ConfigError("input must be a non-empty path")
        if not self.output_dir:
            raise ConfigError("output_dir must be a non-empty path")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        self.window.validate()
        if not self.features:
            raise ConfigError("features must list at least one feature")
        validate_specs(self.features, self.window.count)
        self.cleaning.validate()
        for category, dims in self.pca_dims.items():
            if category not in CATEGORIES:
                raise ConfigError(f"pca_dims: unknown category {category!r}")
            if dims is not None and (
                isinstance(dims, bool) or not isinstance(dims, int) or dims < 1
            ):
                raise ConfigError(
                    f"pca_dims[{category!r}] must be null or an integer >= 1"
                )
        self.clustering.validate()
        if not (self.radial_cap_percent > 0):
            raise ConfigError("report.radial_cap_percent must be > 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        _expect(
            raw,
            "config",
            {
                "input",
                "output_dir",
                "seed",
                "window",
                "features",
                "cleaning",
                "pca_dims",
                "clustering",
                "report",
            },
        )
        window_raw = raw.get("window", {})
        _expect(window_raw, "window", {"width_seconds", "overlap_seconds", "count"})
        window = WindowConfig(
            width=float(_number(window_raw, "window", "width_seconds", 300.0)),
            overlap=float(_number(window_raw, "window", "overlap_seconds", 30.0)),
            count=_integer(window_raw, "window", "count", 2),
        )

        features_raw = raw.get("features", [])
        if not isinstance(features_raw, list):
            raise ConfigError("features must be a list")
        features = [_parse_feature(e, i) for i, e in enumerate(features_raw)]

        cleaning_raw = raw.get("cleaning", {})
        _expect(
            cleaning_raw,
            "cleaning",
            {
                "min_duration_seconds",
                "max_duration_seconds",
                "min_action_events",
                "outlier_sigma",
                "skew_threshold",
                "outlier_categories",
            },
        )
        if "outlier_sigma" in cleaning_raw and cleaning_raw["outlier_sigma"] is None:
            sigma = math.inf  # null disables outlier removal
        else:
            sigma = float(_number(cleaning_raw, "cleaning", "outlier_sigma", 3.0))
        outlier_categories = cleaning_raw.get(
            "outlier_categories", ["Action", "Feedback"]
        )
        if not isinstance(outlier_categories, list) or not all(
            isinstance(c, str) for c in outlier_categories
        ):
            raise ConfigError("cleaning.outlier_categories must be a list of strings")
        cleaning = CleaningRules(
            min_duration=float(
                _number(cleaning_raw, "cleaning", "min_duration_seconds", 300.0)
            ),
            max_duration=float(
                _number(cleaning_raw, "cleaning", "max_duration_seconds", 2700.0)
            ),
            min_action_events=_integer(
                cleaning_raw, "cleaning", "min_action_events", 10
            ),
            outlier_sigma=sigma,
            skew_threshold=float(
                _number(cleaning_raw, "cleaning", "skew_threshold", 2.0)
            ),
            outlier_categories=tuple(outlier_categories),
        )

        pca_raw = raw.get("pca_dims", {})
        if not isinstance(pca_raw, dict):
            raise ConfigError("pca_dims must be an object mapping category to dims")
        pca_dims: dict[str, int | None] = {}
        for category, dims in pca_raw.items():
            pca_dims[category] = dims

        clustering_raw = raw.get("clustering", {})
        _expect(
            clustering_raw,
            "clustering",
            {"k_min", "k_max", "restarts", "k_overrides", "silhouette_cap"},
        )
        overrides_raw = clustering_raw.get("k_overrides", {})
        if not isinstance(overrides_raw, dict):
            raise ConfigError("clustering.k_overrides must be an object")
        clustering = ClusteringConfig(
            k_min=_integer(clustering_raw, "clustering", "k_min", 2),
            k_max=_integer(clustering_raw, "clustering", "k_max", 10),
            restarts=_integer(clustering_raw, "clustering", "restarts", 10),
            k_overrides=dict(overrides_raw),
            silhouette_cap=_integer(
                clustering_raw, "clustering", "silhouette_cap", 20_000
            ),
        )

        report_raw = raw.get("report", {})
        _expect(report_raw, "report", {"radial_cap_percent"})
        radial_cap = float(
            _number(report_raw, "report", "radial_cap_percent", DEFAULT_RADIAL_CAP)
        )

        config = cls(
            input=_string(raw, "config", "input", required=True),
            output_dir=_string(raw, "config", "output_dir", required=True),
            seed=_integer(raw, "config", "seed", 0),
            window=window,
            features=features,
            cleaning=cleaning,
            pca_dims=pca_dims,
            clustering=clustering,
            radial_cap_percent=radial_cap,
        )
        config.validate()
        return config

    def to_dict(self) -> dict:
        sigma = self.cleaning.outlier_sigma
        return {
            "input": self.input,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "window": {
                "width_seconds": self.window.width,
                "overlap_seconds": self.window.overlap,
                "count": self.window.count,
            },
            "features": [_feature_to_dict(s) for s in self.features],
            "cleaning": {
                "min_duration_seconds": self.cleaning.min_duration,
                "max_duration_seconds": self.cleaning.max_duration,
                "min_action_events": self.cleaning.min_action_events,
                "outlier_sigma": None if math.isinf(sigma) else sigma,
                "skew_threshold": self.cleaning.skew_threshold,
                "outlier_categories": list(self.cleaning.outlier_categories),
            },
            "pca_dims": dict(self.pca_dims),
            "clustering": {
                "k_min": self.clustering.k_min,
                "k_max": self.clustering.k_max,
                "restarts": self.clustering.restarts,
                "k_overrides": dict(self.clustering.k_overrides),
                "silhouette_cap": self.clustering.silhouette_cap,
            },
            "report": {"radial_cap_percent": self.radial_cap_percent},
        }


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return PipelineConfig.from_dict(raw)


def load_generator_config(path: str | Path, n_sessions: int, seed: int) -> GeneratorConfig:
    """Load an archetype catalog; session count and seed come from the caller."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read archetype config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"archetype config {path} is not valid JSON: {exc}"
        ) from exc
    _expect(raw, "archetypes config", {"event_categories", "archetypes"})

    event_categories = raw.get("event_categories")
    if not isinstance(event_categories, dict) or not all(
        isinstance(k, str) and isinstance(v, str)
        for k, v in event_categories.items()
    ):
        raise ConfigError(
            "event_categories must map event names to category names"
        )

    archetypes_raw = raw.get("archetypes")
    if not isinstance(archetypes_raw, list) or not archetypes_raw:
        raise ConfigError("archetypes must be a non-empty list")
    archetypes = []
    for i, entry in enumerate(archetypes_raw):
        context = f"archetypes[{i}]"
        _expect(entry, context, {"name", "weight", "duration_range", "rates_per_minute"})
        duration_range = entry.get("duration_range")
        if (
            not isinstance(duration_range, list)
            or len(duration_range) != 2
            or any(
                isinstance(v, bool) or not isinstance(v, (int, float))
                for v in duration_range
            )
        ):
            raise ConfigError(
                f"{context}.duration_range must be [low_seconds, high_seconds]"
            )
        rates = entry.get("rates_per_minute", {})
        if not isinstance(rates, dict) or any(
            not isinstance(k, str)
            or isinstance(v, bool)
            or not isinstance(v, (int, float))
            for k, v in rates.items()
        ):
            raise ConfigError(
                f"{context}.rates_per_minute must map event names to numbers"
            )
        archetypes.append(
            Archetype(
                name=_string(entry, context, "name", required=True),
                weight=float(_number(entry, context, "weight", required=True)),
                duration_range=(float(duration_range[0]), float(duration_range[1])),
                rates_per_minute={k: float(v) for k, v in rates.items()},
            )
        )

    config = GeneratorConfig(
        n_sessions=n_sessions,
        seed=seed,
        event_categories=dict(event_categories),
        archetypes=tuple(archetypes),
    )
    config.validate()
    return config
