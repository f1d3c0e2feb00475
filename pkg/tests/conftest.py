"""Shared fixtures: the end-to-end synthetic run and small helpers."""

from __future__ import annotations

import csv
import hashlib
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import pytest

from playstyles.config import PipelineConfig
from playstyles.pipeline import StageWriter, run, stage_simgen
from playstyles.simgen import Archetype, GeneratorConfig

E2E_SEED = 11

E2E_GENERATOR = GeneratorConfig(
    n_sessions=600,
    seed=E2E_SEED,
    event_categories={n: "Action" for n in ("evt_a", "evt_b", "evt_c", "evt_d")},
    archetypes=(
        Archetype(
            "rusher",
            0.34,
            (360.0, 720.0),
            {"evt_a": 10.0, "evt_b": 0.5, "evt_c": 2.0, "evt_d": 0.25},
        ),
        Archetype(
            "strategist",
            0.33,
            (900.0, 1500.0),
            {"evt_a": 1.0, "evt_b": 6.0, "evt_c": 0.25, "evt_d": 3.0},
        ),
        Archetype(
            "explorer",
            0.33,
            (1800.0, 2400.0),
            {"evt_a": 0.25, "evt_b": 1.0, "evt_c": 9.0, "evt_d": 1.0},
        ),
    ),
)


def e2e_config_dict(events_path: Path, out_dir: Path) -> dict:
    return {
        "input": str(events_path),
        "output_dir": str(out_dir),
        "seed": E2E_SEED,
        "features": [
            {
                "name": "evt_a_early",
                "category": "Action",
                "match": ["evt_a"],
                "scope": {"windows": 2},
            },
            {
                "name": "evt_b_early",
                "category": "Action",
                "match": ["evt_b"],
                "scope": {"windows": 2},
            },
            {
                "name": "evt_c_total",
                "category": "Action",
                "match": ["evt_c"],
                "scope": "session",
            },
            {
                "name": "evt_d_total",
                "category": "Action",
                "match": ["evt_d"],
                "scope": "session",
            },
        ],
        "clustering": {"k_min": 2, "k_max": 8, "restarts": 10},
    }


def checksum_tree(directory: Path) -> dict[str, str]:
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(directory.iterdir())
        if p.is_file()
    }


def read_csv_rows(path: Path) -> list[list[str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@dataclass
class E2ERun:
    base: Path
    out: Path
    config: PipelineConfig
    elapsed_first: float  # seconds for simgen + one full run
    checksums_first: dict[str, str] = field(default_factory=dict)
    checksums_second: dict[str, str] = field(default_factory=dict)

    def ground_truth(self) -> dict[str, str]:
        rows = read_csv_rows(self.base / "ground_truth.csv")
        assert rows[0] == ["session_id", "archetype"]
        return {sid: label for sid, label in rows[1:]}

    def assignments(self) -> dict[str, int]:
        rows = read_csv_rows(self.out / "assignments.csv")
        assert rows[0] == ["session_id", "category", "cluster"]
        return {sid: int(cluster) for sid, _cat, cluster in rows[1:]}

    def sweep(self) -> dict[int, dict]:
        rows = read_csv_rows(self.out / "sweep.csv")
        assert rows[0] == ["category", "k", "avg_silhouette", "inertia", "chosen"]
        return {
            int(k): {
                "avg_silhouette": float(sil),
                "inertia": float(inertia),
                "chosen": chosen == "1",
            }
            for _cat, k, sil, inertia, chosen in rows[1:]
        }


@pytest.fixture(scope="session")
def e2e(tmp_path_factory) -> E2ERun:
    """Synthetic 3-archetype dataset run through the full pipeline twice."""
    base = tmp_path_factory.mktemp("e2e")
    out = base / "out"
    start = time.perf_counter()
    stage_simgen(E2E_GENERATOR, StageWriter(base))
    config = PipelineConfig.from_dict(e2e_config_dict(base / "events.jsonl", out))
    run(config)
    elapsed_first = time.perf_counter() - start
    first = checksum_tree(out)
    run(config)
    second = checksum_tree(out)
    return E2ERun(
        base=base,
        out=out,
        config=config,
        elapsed_first=elapsed_first,
        checksums_first=first,
        checksums_second=second,
    )
