"""Stage orchestration: on-disk artifact layout and the end-to-end run.

Every stage reads its inputs from the previous stage's artifacts and writes
its outputs through a StageWriter, so chained subcommand invocations and a
single `run` produce bit-identical files. Artifacts are written with a
`.partial` suffix and renamed only when the whole stage succeeds; a failed
stage leaves its partials in place for inspection.
"""

from __future__ import annotations

import csv
import importlib.metadata
import io
import json
import os
import platform
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import _kernels
from .clean import filter_sessions, transform_category
from .cluster import sweep_k
from .config import PipelineConfig, derive_seed
from .errors import DataError, PipelineError
from .features import FeatureMatrix, extract_features
from .ingest import parse_events, write_events
from .report import (
    cluster_profiles,
    emit_summary,
    render_radar,
    render_scree,
    summary_json_text,
)
from .simgen import GeneratorConfig, generate

_META_HEADER = ["session_id", "duration_seconds", "action_events"]
_ASSIGN_HEADER = ["session_id", "category", "cluster"]


class _StageHandle:
    """Collects one stage's outputs as .partial files until commit."""

    def __init__(self, writer: "StageWriter"):
        self._writer = writer
        self.pending: list[str] = []

    def write_text(self, name: str, text: str) -> None:
        partial = self._writer.path(name + ".partial")
        partial.write_text(text, encoding="utf-8")
        self.pending.append(name)

    def write_json(self, name: str, payload) -> None:
        self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")


class StageWriter:
    """Artifact reader/writer rooted at one output directory."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def read_text(self, name: str) -> str:
        target = self.path(name)
        if not target.is_file():
            raise DataError(
                f"expected artifact {target} is missing; run the stage that "
                "produces it first"
            )
        return target.read_text(encoding="utf-8")

    def read_json(self, name: str):
        try:
            return json.loads(self.read_text(name))
        except json.JSONDecodeError as exc:
            raise DataError(f"artifact {self.path(name)} is not valid JSON: {exc}")

    @contextmanager
    def stage(self):
        handle = _StageHandle(self)
        yield handle
        # Reached only when the stage body raised nothing: commit atomically
        # per file. On failure the .partial files stay behind.
        for name in handle.pending:
            os.replace(self.path(name + ".partial"), self.path(name))


def _spec_categories(config: PipelineConfig) -> list[str]:
    return sorted({spec.category for spec in config.features})


def _restrict(config: PipelineConfig, only: str | None) -> list[str]:
    categories = _spec_categories(config)
    if only is None:
        return categories
    if only not in categories:
        raise DataError(
            f"category {only!r} has no configured features; "
            f"available: {', '.join(categories)}"
        )
    return [only]


def stage_ingest(config: PipelineConfig, writer: StageWriter) -> dict:
    """Parse the raw log into normalized sessions plus per-session metadata."""
    in_path = Path(config.input)
    if not in_path.is_file():
        raise DataError(f"input file {in_path} does not exist")
    with in_path.open(encoding="utf-8") as fh:
        sessions, report = parse_events(fh)

    events_buf = io.StringIO()
    n_events = write_events(sessions, events_buf)
    meta_buf = io.StringIO()
    meta = csv.writer(meta_buf, lineterminator="\n")
    meta.writerow(_META_HEADER)
    for session in sessions:
        meta.writerow([session.id, repr(session.duration), session.action_event_count()])

    with writer.stage() as out:
        out.write_text("sessions.jsonl", events_buf.getvalue())
        out.write_json("parse_report.json", report.to_dict())
        out.write_text("session_meta.csv", meta_buf.getvalue())
    return {
        "sessions": report.sessions,
        "events": n_events,
        "rejected_lines": report.rejected,
    }


def _read_sessions(writer: StageWriter):
    text = writer.read_text("sessions.jsonl")
    sessions, report = parse_events(io.StringIO(text))
    if report.rejected:
        raise DataError(
            f"normalized artifact {writer.path('sessions.jsonl')} has "
            f"{report.rejected} malformed lines; re-run the ingest stage"
        )
    return sessions


def _read_session_meta(writer: StageWriter) -> tuple[dict[str, float], dict[str, int]]:
    reader = csv.reader(io.StringIO(writer.read_text("session_meta.csv")))
    header = next(reader, None)
    if header != _META_HEADER:
        raise DataError(
            f"artifact {writer.path('session_meta.csv')} has an unexpected header"
        )
    durations: dict[str, float] = {}
    actions: dict[str, int] = {}
    for row in reader:
        if not row:
            continue
        durations[row[0]] = float(row[1])
        actions[row[0]] = int(row[2])
    return durations, actions


def stage_featurize(config: PipelineConfig, writer: StageWriter) -> dict:
    """Aggregate events into one feature matrix per configured category."""
    sessions = _read_sessions(writer)
    matrices, issues = extract_features(sessions, config.features, config.window)
    categories = sorted(matrices)
    report_payload = {
        "payload_issues": [
            {
                "session_id": issue.session_id,
                "feature": issue.feature,
                "event_name": issue.event_name,
                "value": issue.value,
            }
            for issue in issues
        ],
        "categories": {
            c: {
                "features": matrices[c].feature_names,
                "sessions": len(matrices[c].session_ids),
            }
            for c in categories
        },
    }
    with writer.stage() as out:
        for c in categories:
            out.write_text(f"features_{c}.csv", matrices[c].to_csv_text())
        out.write_json("featurize_report.json", report_payload)
    return {
        "sessions": len(sessions),
        "categories": {c: len(matrices[c].session_ids) for c in categories},
    }


def stage_clean(
    config: PipelineConfig, writer: StageWriter, only: str | None = None
) -> dict:
    """Filter, de-outlier, and transform each category matrix for clustering."""
    categories = _restrict(config, only)
    durations, actions = _read_session_meta(writer)
    matrices = {}
    for c in categories:
        matrix = FeatureMatrix.from_csv(
            io.StringIO(writer.read_text(f"features_{c}.csv")), c
        )
        unknown = [sid for sid in matrix.session_ids if sid not in durations]
        if unknown:
            raise DataError(
                f"features_{c}.csv has sessions missing from session_meta.csv "
                f"(first: {unknown[0]})"
            )
        matrices[c] = matrix

    filtered, removed = filter_sessions(matrices, durations, actions, config.cleaning)
    removed_payload = [
        {"session_id": r.session_id, "reasons": r.reasons} for r in removed
    ]

    summary: dict = {"sessions_removed_by_filter": len(removed), "categories": {}}
    with writer.stage() as out:
        for c in categories:
            base = {
                "category": c,
                "sessions_in": len(matrices[c].session_ids),
                "sessions_removed_by_filter": len(removed),
                "removed_by_filter": removed_payload,
            }
            try:
                result = transform_category(
                    filtered[c], config.cleaning, config.pca_dims.get(c)
                )
            except DataError as exc:
                out.write_json(f"transform_{c}.json", {**base, "skipped": str(exc)})
                summary["categories"][c] = {"sessions": 0, "skipped": str(exc)}
                continue

            record = result.record
            payload = {
                **base,
                **record.to_dict(),
                "outliers_removed": len(result.outliers_removed),
                "outlier_sessions": [
                    {"session_id": r.session_id, "reasons": r.reasons}
                    for r in result.outliers_removed
                ],
                "sessions_out": len(result.clean_matrix.session_ids),
            }
            reduced = FeatureMatrix(
                category=c,
                feature_names=[f"pc{j + 1}" for j in range(result.reduced.shape[1])],
                session_ids=list(result.clean_matrix.session_ids),
                values=result.reduced,
            )
            scree_buf = io.StringIO()
            scree = csv.writer(scree_buf, lineterminator="\n")
            scree.writerow(["component", "explained_variance"])
            for j, v in enumerate(record.explained_variance, start=1):
                scree.writerow([j, repr(float(v))])

            out.write_text(f"clean_{c}.csv", result.clean_matrix.to_csv_text())
            out.write_text(f"reduced_{c}.csv", reduced.to_csv_text())
            out.write_json(f"transform_{c}.json", payload)
            out.write_text(f"scree_{c}.csv", scree_buf.getvalue())
            out.write_text(
                f"scree_{c}.svg",
                render_scree(record.explained_variance, record.chosen_dims, c),
            )
            summary["categories"][c] = {
                "sessions": payload["sessions_out"],
                "outliers_removed": payload["outliers_removed"],
                "pca_dims": record.chosen_dims,
            }
    return summary


def stage_cluster(
    config: PipelineConfig,
    writer: StageWriter,
    only: str | None = None,
    k_override: int | None = None,
) -> dict:
    """Sweep k per category, keep the chosen clustering, export the tables."""
    categories = _restrict(config, only)
    sweep_rows: list[tuple] = []
    assignment_rows: list[tuple] = []
    kmeans_payloads: dict[str, dict] = {}
    summary: dict = {}

    for c in categories:
        transform = writer.read_json(f"transform_{c}.json")
        if "skipped" in transform:
            summary[c] = {"skipped": transform["skipped"]}
            continue
        reduced = FeatureMatrix.from_csv(
            io.StringIO(writer.read_text(f"reduced_{c}.csv")), c
        )
        seed = derive_seed(config.seed, f"cluster:{c}")
        override = (
            k_override
            if k_override is not None
            else config.clustering.k_overrides.get(c)
        )
        table = sweep_k(
            reduced.values,
            k_min=config.clustering.k_min,
            k_max=config.clustering.k_max,
            seed=seed,
            restarts=config.clustering.restarts,
            override=override,
            silhouette_cap=config.clustering.silhouette_cap,
        )
        chosen = table.row_for(table.chosen_k)
        for row in table.rows:
            sweep_rows.append(
                (c, row.k, row.avg_silhouette, row.inertia, int(row.k == table.chosen_k))
            )
        for sid, label in zip(reduced.session_ids, chosen.result.labels):
            assignment_rows.append((sid, c, int(label)))
        labels, counts = np.unique(chosen.result.labels, return_counts=True)
        kmeans_payloads[c] = {
            "category": c,
            "k": chosen.result.k,
            "selection_mode": table.mode,
            "seed": seed,
            "restarts": chosen.result.restarts,
            "iterations": chosen.result.iterations,
            "inertia": chosen.result.inertia,
            "avg_silhouette": chosen.avg_silhouette,
            "cluster_sizes": {str(int(l)): int(n) for l, n in zip(labels, counts)},
            "centroids": chosen.result.centroids.tolist(),
        }
        summary[c] = {
            "sessions": len(reduced.session_ids),
            "chosen_k": table.chosen_k,
            "mode": table.mode,
            "avg_silhouette": chosen.avg_silhouette,
        }

    sweep_buf = io.StringIO()
    sweep_csv = csv.writer(sweep_buf, lineterminator="\n")
    sweep_csv.writerow(["category", "k", "avg_silhouette", "inertia", "chosen"])
    for c, k, sil, inertia, flag in sweep_rows:
        sweep_csv.writerow([c, k, repr(float(sil)), repr(float(inertia)), flag])
    assign_buf = io.StringIO()
    assign_csv = csv.writer(assign_buf, lineterminator="\n")
    assign_csv.writerow(_ASSIGN_HEADER)
    for sid, c, label in assignment_rows:
        assign_csv.writerow([sid, c, label])

    with writer.stage() as out:
        out.write_text("sweep.csv", sweep_buf.getvalue())
        out.write_text("assignments.csv", assign_buf.getvalue())
        for c in sorted(kmeans_payloads):
            out.write_json(f"kmeans_{c}.json", kmeans_payloads[c])
    return summary


def _read_assignments(writer: StageWriter) -> dict[str, dict[str, int]]:
    reader = csv.reader(io.StringIO(writer.read_text("assignments.csv")))
    header = next(reader, None)
    if header != _ASSIGN_HEADER:
        raise DataError(
            f"artifact {writer.path('assignments.csv')} has an unexpected header"
        )
    by_category: dict[str, dict[str, int]] = {}
    for row in reader:
        if not row:
            continue
        by_category.setdefault(row[1], {})[row[0]] = int(row[2])
    return by_category


def stage_report(
    config: PipelineConfig, writer: StageWriter, only: str | None = None
) -> dict:
    """Render radar charts and the human/machine-readable run summaries."""
    categories = _restrict(config, only)
    transforms = {c: writer.read_json(f"transform_{c}.json") for c in categories}
    assignments = _read_assignments(writer)

    profiles_by_cat = {}
    sweep_summaries = {}
    summary: dict = {}
    with writer.stage() as out:
        for c in categories:
            if "skipped" in transforms[c]:
                summary[c] = {"skipped": transforms[c]["skipped"]}
                continue
            km = writer.read_json(f"kmeans_{c}.json")
            sweep_summaries[c] = {
                "chosen_k": km["k"],
                "mode": km["selection_mode"],
                "avg_silhouette": km["avg_silhouette"],
            }
            clean_matrix = FeatureMatrix.from_csv(
                io.StringIO(writer.read_text(f"clean_{c}.csv")), c
            )
            labels_map = assignments.get(c)
            if labels_map is None or set(labels_map) != set(clean_matrix.session_ids):
                raise DataError(
                    f"assignments.csv does not cover the sessions in clean_{c}.csv"
                )
            labels = np.array(
                [labels_map[sid] for sid in clean_matrix.session_ids], dtype=np.int64
            )
            profiles = cluster_profiles(clean_matrix, labels)
            profiles_by_cat[c] = profiles

            prof_buf = io.StringIO()
            prof_csv = csv.writer(prof_buf, lineterminator="\n")
            prof_csv.writerow(
                ["cluster", "size", "feature", "cluster_mean", "population_mean", "percent"]
            )
            for p in profiles:
                for name, cm, pm, pct in zip(
                    p.feature_names, p.cluster_means, p.population_means, p.percents
                ):
                    prof_csv.writerow(
                        [
                            p.cluster_id,
                            p.size,
                            name,
                            repr(cm),
                            repr(pm),
                            "n/a" if pct is None else repr(pct),
                        ]
                    )
            out.write_text(
                f"radar_{c}.svg", render_radar(profiles, config.radial_cap_percent)
            )
            out.write_text(f"profiles_{c}.csv", prof_buf.getvalue())
            summary[c] = {"clusters": len(profiles)}

        run_settings = {
            "window": {
                "width_seconds": config.window.width,
                "overlap_seconds": config.window.overlap,
                "count": config.window.count,
            },
            "k_overrides": dict(config.clustering.k_overrides),
            "seed": config.seed,
        }
        md_text, payload = emit_summary(
            profiles_by_cat, sweep_summaries, transforms, run_settings
        )
        out.write_text("report.md", md_text)
        out.write_text("report.json", summary_json_text(payload))
    return summary


def stage_simgen(gen_config: GeneratorConfig, writer: StageWriter) -> dict:
    """Generate a synthetic log plus its ground-truth archetype labels."""
    sessions, labels = generate(gen_config)
    events_buf = io.StringIO()
    n_events = write_events(sessions, events_buf)
    gt_buf = io.StringIO()
    gt = csv.writer(gt_buf, lineterminator="\n")
    gt.writerow(["session_id", "archetype"])
    for session, label in zip(sessions, labels):
        gt.writerow([session.id, label])
    with writer.stage() as out:
        out.write_text("events.jsonl", events_buf.getvalue())
        out.write_text("ground_truth.csv", gt_buf.getvalue())
    return {"sessions": len(sessions), "events": n_events}


def _versions() -> dict:
    try:
        version = importlib.metadata.version("playstyles")
    except importlib.metadata.PackageNotFoundError:
        version = "unknown"
    return {
        "playstyles": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": _kernels.BACKEND,
    }


_RUN_STAGES = (
    ("ingest", stage_ingest),
    ("featurize", stage_featurize),
    ("clean", stage_clean),
    ("cluster", stage_cluster),
    ("report", stage_report),
)


def run(config: PipelineConfig, log=None) -> Path:
    """Execute every stage in order and write the run manifest.

    `log` is an optional callable for progress lines. Raises PipelineError
    subclasses with a stage-named message on failure.
    """
    config.validate()
    writer = StageWriter(config.output_dir)
    stage_summaries = {}
    for name, fn in _RUN_STAGES:
        try:
            stage_summaries[name] = fn(config, writer)
        except PipelineError as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc
        if log is not None:
            log(f"{name}: {json.dumps(stage_summaries[name], sort_keys=True)}")

    manifest = {
        "config": config.to_dict(),
        "versions": _versions(),
        "seeds": {
            "master": config.seed,
            **{
                f"cluster:{c}": derive_seed(config.seed, f"cluster:{c}")
                for c in _spec_categories(config)
            },
        },
        "stages": stage_summaries,
    }
    with writer.stage() as out:
        out.write_json("run_manifest.json", manifest)
    return writer.out_dir
