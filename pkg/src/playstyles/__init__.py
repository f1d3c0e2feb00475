"""Batch analytics toolkit for clustering gameplay styles from telemetry.

Pipeline stages: ingest JSON Lines event logs, aggregate windowed count
features per event category, clean and reduce (validity filter, outlier
removal, log transform, z-score, PCA), cluster with k-means selected by
average silhouette, and report population-relative radar profiles.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .clean import (
    CleaningRules,
    TransformRecord,
    filter_sessions,
    pca_fit,
    remove_outliers,
    select_knee,
    standardize,
    transform_category,
)
from .cluster import KMeansResult, SweepTable, kmeans, silhouette, sweep_k
from .config import PipelineConfig, derive_seed
from .errors import ConfigError, DataError, NumericError, PipelineError
from .events import CATEGORIES, Event, Session, Window
from .features import FeatureMatrix, FeatureSpec, extract_features
from .ingest import ParseReport, WindowConfig, parse_events, segment_windows
from .pipeline import StageWriter, run
from .report import RadarProfile, cluster_profiles, render_radar
from .simgen import Archetype, GeneratorConfig, generate, majority_label_purity

__version__ = "0.1.0"

__all__ = [
    "Archetype",
    "CATEGORIES",
    "CleaningRules",
    "ConfigError",
    "DataError",
    "Event",
    "FeatureMatrix",
    "FeatureSpec",
    "GeneratorConfig",
    "KERNEL_BACKEND",
    "KMeansResult",
    "NumericError",
    "ParseReport",
    "PipelineConfig",
    "PipelineError",
    "RadarProfile",
    "Session",
    "StageWriter",
    "SweepTable",
    "TransformRecord",
    "Window",
    "WindowConfig",
    "cluster_profiles",
    "derive_seed",
    "extract_features",
    "filter_sessions",
    "generate",
    "kmeans",
    "majority_label_purity",
    "parse_events",
    "pca_fit",
    "remove_outliers",
    "render_radar",
    "run",
    "segment_windows",
    "select_knee",
    "silhouette",
    "standardize",
    "sweep_k",
    "transform_category",
]
