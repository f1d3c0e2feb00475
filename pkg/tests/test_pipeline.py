"""Stage orchestration, artifact layout, and failure semantics."""

import json

import pytest

from conftest import checksum_tree
from playstyles.config import PipelineConfig
from playstyles.errors import DataError
from playstyles.pipeline import (
    StageWriter,
    run,
    stage_clean,
    stage_cluster,
    stage_featurize,
    stage_ingest,
    stage_report,
    stage_simgen,
)
from playstyles.simgen import Archetype, GeneratorConfig

_GENERATOR = GeneratorConfig(
    n_sessions=30,
    seed=5,
    event_categories={"evt_a": "Action", "evt_b": "Action", "level_up": "Progression"},
    archetypes=(
        Archetype("clicker", 0.5, (360.0, 600.0),
                  {"evt_a": 12.0, "evt_b": 1.0, "level_up": 2.0}),
        Archetype("watcher", 0.5, (400.0, 700.0),
                  {"evt_a": 1.2, "evt_b": 10.0, "level_up": 0.5}),
    ),
)


def _config(events_path, out_dir):
    return PipelineConfig.from_dict({
        "input": str(events_path),
        "output_dir": str(out_dir),
        "seed": 0,
        "window": {"width_seconds": 120, "overlap_seconds": 30, "count": 2},
        "features": [
            {"name": "evt_a_total", "category": "Action", "match": ["evt_a"]},
            {"name": "evt_b_total", "category": "Action", "match": ["evt_b"]},
            {"name": "evt_a_early", "category": "Action", "match": ["evt_a"],
             "scope": {"windows": 2}},
            {"name": "evt_b_early", "category": "Action", "match": ["evt_b"],
             "scope": {"windows": 2}},
            {"name": "levels", "category": "Progression", "match": ["level_up"]},
            {"name": "end_markers", "category": "Progression", "match": ["session_end"]},
            {"name": "play_time", "category": "Progression",
             "aggregator": "session_duration"},
        ],
        "cleaning": {
            "min_duration_seconds": 60,
            "max_duration_seconds": 2700,
            "min_action_events": 5,
        },
        "pca_dims": {"Action": 2, "Progression": 1},
        "clustering": {"k_min": 2, "k_max": 4, "restarts": 5},
    })


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    base = tmp_path_factory.mktemp("pipeline")
    data = base / "data"
    stage_simgen(_GENERATOR, StageWriter(data))
    return base, data / "events.jsonl"


def test_run_matches_chained_stages(dataset):
    base, events = dataset
    cfg_a = _config(events, base / "full_run")
    run(cfg_a)
    cfg_b = _config(events, base / "chained")
    writer = StageWriter(cfg_b.output_dir)
    stage_ingest(cfg_b, writer)
    stage_featurize(cfg_b, writer)
    stage_clean(cfg_b, writer)
    stage_cluster(cfg_b, writer)
    stage_report(cfg_b, writer)

    a = checksum_tree(base / "full_run")
    b = checksum_tree(base / "chained")
    manifest_only = set(a) - set(b)
    assert manifest_only == {"run_manifest.json"}
    # Artifact bytes are identical apart from the config echo in the manifest
    # (output_dir differs by construction).
    assert {k: v for k, v in a.items() if k != "run_manifest.json"} == b


def test_manifest_counts_are_consistent(dataset):
    base, events = dataset
    out = base / "full_run"
    manifest = json.loads((out / "run_manifest.json").read_text())
    stages = manifest["stages"]
    assert stages["ingest"]["sessions"] == 30
    assert stages["ingest"]["rejected_lines"] == 0
    for c, n in stages["featurize"]["categories"].items():
        assert n == 30
    removed = stages["clean"]["sessions_removed_by_filter"]
    for c, info in stages["clean"]["categories"].items():
        assert info["sessions"] <= 30 - removed
        assert stages["cluster"][c]["sessions"] == info["sessions"]
    for c, info in stages["cluster"].items():
        transform = json.loads((out / f"transform_{c}.json").read_text())
        assert info["sessions"] == transform["sessions_out"]
    assert manifest["versions"]["kernel_backend"] in ("cython", "python")
    assert manifest["seeds"]["master"] == 0
    assert set(manifest["seeds"]) == {"master", "cluster:Action", "cluster:Progression"}


def test_stage_writer_commits_only_on_success(tmp_path):
    writer = StageWriter(tmp_path)
    with writer.stage() as out:
        out.write_text("good.txt", "ok\n")
    assert (tmp_path / "good.txt").read_text() == "ok\n"
    assert not (tmp_path / "good.txt.partial").exists()

    with pytest.raises(RuntimeError):
        with writer.stage() as out:
            out.write_text("bad.txt", "halfway\n")
            raise RuntimeError("boom")
    assert not (tmp_path / "bad.txt").exists()
    assert (tmp_path / "bad.txt.partial").read_text() == "halfway\n"


def test_missing_artifact_names_the_file(dataset, tmp_path):
    base, events = dataset
    cfg = _config(events, tmp_path)
    with pytest.raises(DataError, match="sessions.jsonl"):
        stage_featurize(cfg, StageWriter(tmp_path))
    with pytest.raises(DataError, match="session_meta.csv"):
        stage_clean(cfg, StageWriter(tmp_path))


def test_clean_only_restricts_categories(dataset, tmp_path):
    base, events = dataset
    cfg = _config(events, tmp_path)
    writer = StageWriter(tmp_path)
    stage_ingest(cfg, writer)
    stage_featurize(cfg, writer)
    summary = stage_clean(cfg, writer, only="Progression")
    assert set(summary["categories"]) == {"Progression"}
    assert (tmp_path / "clean_Progression.csv").exists()
    assert not (tmp_path / "clean_Action.csv").exists()
    with pytest.raises(DataError, match="Chaos"):
        stage_clean(cfg, writer, only="Chaos")


def test_run_wraps_stage_errors_with_stage_name(dataset, tmp_path):
    base, events = dataset
    cfg = _config(tmp_path / "absent.jsonl", tmp_path / "out")
    with pytest.raises(DataError, match="stage ingest"):
        run(cfg)
    # failed ingest leaves no committed artifacts behind
    assert not (tmp_path / "out" / "sessions.jsonl").exists()


def test_double_run_is_byte_identical(dataset):
    base, events = dataset
    out = base / "repeat"
    cfg = _config(events, out)
    run(cfg)
    first = checksum_tree(out)
    run(cfg)
    assert checksum_tree(out) == first
