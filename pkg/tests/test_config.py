"""Config parsing, validation, and seed derivation."""

import json
import math

import pytest

from playstyles.config import (
    PipelineConfig,
    derive_seed,
    load_generator_config,
    load_pipeline_config,
)
from playstyles.errors import ConfigError


def _raw(**over):
    raw = {
        "input": "events.jsonl",
        "output_dir": "out",
        "features": [
            {"name": "hovers", "category": "Action", "match": ["tile_hover"]},
        ],
    }
    raw.update(over)
    return raw


def test_defaults_fill_in():
    cfg = PipelineConfig.from_dict(_raw())
    assert cfg.seed == 0
    assert (cfg.window.width, cfg.window.overlap, cfg.window.count) == (300.0, 30.0, 2)
    assert cfg.cleaning.min_duration == 300.0
    assert cfg.cleaning.max_duration == 2700.0
    assert cfg.cleaning.min_action_events == 10
    assert cfg.cleaning.outlier_sigma == 3.0
    assert cfg.cleaning.skew_threshold == 2.0
    assert cfg.cleaning.outlier_categories == ("Action", "Feedback")
    assert (cfg.clustering.k_min, cfg.clustering.k_max) == (2, 10)
    assert cfg.clustering.restarts == 10
    assert cfg.clustering.silhouette_cap == 20_000
    assert cfg.radial_cap_percent == 300.0


def test_unknown_top_level_field_named():
    with pytest.raises(ConfigError, match="wibble"):
        PipelineConfig.from_dict(_raw(wibble=1))


def test_unknown_nested_field_named_with_context():
    with pytest.raises(ConfigError, match=r"window.*hop"):
        PipelineConfig.from_dict(_raw(window={"hop": 3}))
    with pytest.raises(ConfigError, match=r"features\[0\].*weights"):
        PipelineConfig.from_dict(
            _raw(features=[{"name": "x", "category": "Action", "match": ["e"], "weights": 1}])
        )


def test_bool_is_not_a_number():
    with pytest.raises(ConfigError, match="seed"):
        PipelineConfig.from_dict(_raw(seed=True))


def test_null_outlier_sigma_means_disabled():
    cfg = PipelineConfig.from_dict(_raw(cleaning={"outlier_sigma": None}))
    assert math.isinf(cfg.cleaning.outlier_sigma)
    assert cfg.to_dict()["cleaning"]["outlier_sigma"] is None


def test_roundtrip_via_to_dict():
    raw = _raw(
        seed=42,
        window={"width_seconds": 299, "overlap_seconds": 29, "count": 3},
        features=[
            {"name": "hovers", "category": "Action", "match": ["tile_hover"],
             "scope": {"windows": 2}},
            {"name": "playtime", "category": "Progression",
             "aggregator": "session_duration"},
        ],
        cleaning={"outlier_sigma": 2.5, "outlier_categories": ["Action"]},
        pca_dims={"Action": 2, "Progression": None},
        clustering={"k_min": 2, "k_max": 6, "k_overrides": {"Action": 4}},
        report={"radial_cap_percent": 250},
    )
    cfg = PipelineConfig.from_dict(raw)
    again = PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


def test_window_geometry_validated():
    with pytest.raises(ConfigError, match="overlap"):
        PipelineConfig.from_dict(
            _raw(window={"width_seconds": 100, "overlap_seconds": 100, "count": 2})
        )


def test_feature_scope_forms():
    cfg = PipelineConfig.from_dict(
        _raw(features=[
            {"name": "a", "category": "Action", "match": ["e"], "scope": "session"},
            {"name": "b", "category": "Action", "match": ["e"], "scope": {"windows": 1}},
        ])
    )
    assert cfg.features[0].first_windows is None
    assert cfg.features[1].first_windows == 1
    with pytest.raises(ConfigError, match="scope"):
        PipelineConfig.from_dict(
            _raw(features=[{"name": "a", "category": "Action", "match": ["e"],
                            "scope": "windowed"}])
        )


def test_session_duration_needs_no_match():
    cfg = PipelineConfig.from_dict(
        _raw(features=[{"name": "t", "category": "Progression",
                        "aggregator": "session_duration"}])
    )
    assert cfg.features[0].aggregator == "session_duration"
    with pytest.raises(ConfigError, match="match"):
        PipelineConfig.from_dict(
            _raw(features=[{"name": "t", "category": "Action", "match": []}])
        )


def test_unknown_category_rejected_everywhere():
    with pytest.raises(ConfigError, match="Chaos"):
        PipelineConfig.from_dict(
            _raw(features=[{"name": "a", "category": "Chaos", "match": ["e"]}])
        )
    with pytest.raises(ConfigError, match="Chaos"):
        PipelineConfig.from_dict(_raw(pca_dims={"Chaos": 2}))
    with pytest.raises(ConfigError, match="Chaos"):
        PipelineConfig.from_dict(_raw(clustering={"k_overrides": {"Chaos": 3}}))


def test_k_override_values_validated():
    with pytest.raises(ConfigError, match="k_overrides"):
        PipelineConfig.from_dict(_raw(clustering={"k_overrides": {"Action": 1}}))
    with pytest.raises(ConfigError, match="k_overrides"):
        PipelineConfig.from_dict(_raw(clustering={"k_overrides": {"Action": True}}))


def test_load_pipeline_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_pipeline_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_pipeline_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_raw()), encoding="utf-8")
    assert load_pipeline_config(good).input == "events.jsonl"


def test_load_generator_config(tmp_path):
    doc = {
        "event_categories": {"evt_a": "Action"},
        "archetypes": [
            {"name": "solo", "weight": 1.0, "duration_range": [60, 120],
             "rates_per_minute": {"evt_a": 2.0}},
        ],
    }
    path = tmp_path / "arch.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    gen = load_generator_config(path, n_sessions=10, seed=3)
    assert gen.n_sessions == 10
    assert gen.seed == 3
    assert gen.archetypes[0].name == "solo"
    doc["archetypes"][0]["weight"] = 0.5
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ConfigError, match="weight"):
        load_generator_config(path, n_sessions=10, seed=3)


def test_derive_seed_is_stable_and_label_sensitive():
    assert derive_seed(0, "cluster:Action") == derive_seed(0, "cluster:Action")
    assert derive_seed(0, "cluster:Action") != derive_seed(0, "cluster:Feedback")
    assert derive_seed(0, "cluster:Action") != derive_seed(1, "cluster:Action")
    value = derive_seed(7, "anything")
    assert 0 <= value < 2**64
