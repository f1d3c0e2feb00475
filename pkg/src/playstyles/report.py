"""Population-relative cluster profiles, radar charts, and run summaries.

Profiles are computed on the filtered-but-untransformed feature values so
radar axes stay readable in game terms. SVG output is deterministic: no
timestamps, stable element order, floats serialized with repr.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FeatureMatrix

DEFAULT_RADIAL_CAP = 300.0  # percent

_PANEL = 260.0
_RADIUS = 82.0
_COLS = 3


@dataclass
class RadarProfile:
    """One cluster's per-feature means as percentages of the population mean."""

    category: str
    cluster_id: int
    size: int
    feature_names: list[str]
    cluster_means: list[float]
    population_means: list[float]
    percents: list[float | None]  # None where the population mean is 0

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "cluster": self.cluster_id,
            "size": self.size,
            "features": [
                {
                    "name": n,
                    "cluster_mean": cm,
                    "population_mean": pm,
                    "percent": pct,
                }
                for n, cm, pm, pct in zip(
                    self.feature_names,
                    self.cluster_means,
                    self.population_means,
                    self.percents,
                )
            ],
        }


def cluster_profiles(
    matrix: FeatureMatrix, assignments: np.ndarray
) -> list[RadarProfile]:
    """Per-cluster feature means as a percentage of the population mean.

    `matrix` must hold the post-cleaning, pre-transform values for exactly
    the clustered sessions, in assignment order.
    """
    labels = np.asarray(assignments)
    if labels.shape[0] != matrix.values.shape[0]:
        raise DataError("assignments do not cover the matrix's sessions")
    population_mean = matrix.values.mean(axis=0)
    profiles = []
    for cluster_id in sorted(int(c) for c in np.unique(labels)):
        rows = matrix.values[labels == cluster_id]
        cluster_mean = rows.mean(axis=0)
        percents: list[float | None] = []
        for cm, pm in zip(cluster_mean, population_mean):
            percents.append(None if pm == 0.0 else 100.0 * float(cm) / float(pm))
        profiles.append(
            RadarProfile(
                category=matrix.category,
                cluster_id=cluster_id,
                size=int(rows.shape[0]),
                feature_names=list(matrix.feature_names),
                cluster_means=[float(v) for v in cluster_mean],
                population_means=[float(v) for v in population_mean],
                percents=percents,
            )
        )
    return profiles


def _axis_angles(n_axes: int) -> list[float]:
    return [-math.pi / 2 + 2 * math.pi * i / n_axes for i in range(n_axes)]


def _panel_svg(
    profile: RadarProfile, cx: float, cy: float, cap: float
) -> list[str]:
    angles = _axis_angles(len(profile.feature_names))
    rings = [100.0 * r for r in range(1, int(cap // 100) + 1)]
    if cap not in rings:
        rings.append(cap)

    parts = [f'<g class="panel" data-cx="{cx!r}" data-cy="{cy!r}">']
    parts.append(
        f'<text class="title" x="{cx!r}" y="{(cy - _RADIUS - 28.0)!r}">'
        f"Cluster {profile.cluster_id} (n={profile.size})</text>"
    )
    for ring in rings:
        r = _RADIUS * ring / cap
        cls = "ref-ring" if ring == 100.0 else "ring"
        parts.append(f'<circle class="{cls}" cx="{cx!r}" cy="{cy!r}" r="{r!r}"/>')

    vertices = []
    markers = []
    labels = []
    for name, percent, angle in zip(profile.feature_names, profile.percents, angles):
        ux, uy = math.cos(angle), math.sin(angle)
        axis_cls = "axis" if percent is not None else "axis na"
        parts.append(
            f'<line class="{axis_cls}" x1="{cx!r}" y1="{cy!r}" '
            f'x2="{(cx + _RADIUS * ux)!r}" y2="{(cy + _RADIUS * uy)!r}"/>'
        )
        if percent is None:
            r = 0.0
            label = f"{name} (n/a)"
        else:
            r = _RADIUS * min(percent, cap) / cap
            label = name
            if percent > cap:
                markers.append(
                    f'<circle class="capped" cx="{(cx + r * ux)!r}" '
                    f'cy="{(cy + r * uy)!r}" r="3.0"/>'
                )
        vertices.append(f"{(cx + r * ux)!r},{(cy + r * uy)!r}")
        anchor = "middle" if abs(ux) < 1e-9 else ("start" if ux > 0 else "end")
        lx, ly = cx + (_RADIUS + 10.0) * ux, cy + (_RADIUS + 10.0) * uy
        labels.append(
            f'<text class="axis-label" text-anchor="{anchor}" '
            f'x="{lx!r}" y="{ly!r}">{label}</text>'
        )
    parts.append(f'<polygon class="profile" points="{" ".join(vertices)}"/>')
    parts.extend(markers)
    parts.extend(labels)
    parts.append("</g>")
    return parts


def render_radar(
    profiles: list[RadarProfile], radial_cap: float = DEFAULT_RADIAL_CAP
) -> str:
    """Small-multiple radar chart SVG, one panel per cluster.

    Axes follow the profile's feature order; a highlighted ring marks 100%
    of the population mean. Percents above `radial_cap` are drawn at the cap
    with an overflow marker; zero-population-mean axes are drawn dashed and
    annotated "n/a" instead of plotting a number.
    """
    if not profiles:
        raise DataError("no profiles to render")
    n_axes = len(profiles[0].feature_names)
    if n_axes < 3:
        raise DataError(
            f"category {profiles[0].category}: radar charts need at least 3 "
            f"feature axes, have {n_axes}; export a bar chart from the "
            "profiles CSV instead"
        )
    if radial_cap <= 0:
        raise DataError(f"radial cap must be positive, got {radial_cap}")

    cols = min(_COLS, len(profiles))
    rows = (len(profiles) + cols - 1) // cols
    width = cols * _PANEL
    height = rows * _PANEL + 20.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width!r}" '
        f'height="{height!r}" viewBox="0 0 {width!r} {height!r}">',
        "<style>",
        "text { font-family: sans-serif; }",
        ".title { font-size: 11px; text-anchor: middle; font-weight: bold; }",
        ".axis-label { font-size: 7px; fill: #333333; }",
        ".ring { fill: none; stroke: #cccccc; stroke-width: 0.7; }",
        ".ref-ring { fill: none; stroke: #666666; stroke-width: 1.0; stroke-dasharray: 3 2; }",
        ".axis { stroke: #dddddd; stroke-width: 0.7; }",
        ".axis.na { stroke-dasharray: 2 2; stroke: #bbbbbb; }",
        ".profile { fill: #4477aa; fill-opacity: 0.35; stroke: #4477aa; stroke-width: 1.4; }",
        ".capped { fill: #cc3311; }",
        "</style>",
        f'<text class="title" x="{(width / 2)!r}" y="14.0">'
        f"{profiles[0].category} clusters (axes: % of population mean, "
        f"cap {radial_cap:g}%)</text>",
    ]
    for i, profile in enumerate(sorted(profiles, key=lambda p: p.cluster_id)):
        cx = (i % cols) * _PANEL + _PANEL / 2
        cy = (i // cols) * _PANEL + _PANEL / 2 + 20.0
        parts.extend(_panel_svg(profile, cx, cy, radial_cap))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_scree(
    explained_variance: list[float], chosen_dims: int, category: str
) -> str:
    """Scree line plot with the retained-dimension cut marked."""
    m = len(explained_variance)
    if m == 0:
        raise DataError("scree plot needs at least one explained variance")
    width, height = 360.0, 240.0
    left, right, top, bottom = 42.0, 16.0, 30.0, 34.0
    plot_w, plot_h = width - left - right, height - top - bottom
    peak = max(max(explained_variance), 1e-12)

    def pos(i: int, v: float) -> tuple[float, float]:
        x = left if m == 1 else left + plot_w * i / (m - 1)
        return x, top + plot_h * (1.0 - v / peak)

    points = [pos(i, v) for i, v in enumerate(explained_variance)]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width!r}" '
        f'height="{height!r}" viewBox="0 0 {width!r} {height!r}">',
        "<style>",
        "text { font-family: sans-serif; font-size: 10px; }",
        ".title { font-size: 11px; text-anchor: middle; font-weight: bold; }",
        ".frame { fill: none; stroke: #999999; stroke-width: 1.0; }",
        ".curve { fill: none; stroke: #4477aa; stroke-width: 1.6; }",
        ".pt { fill: #4477aa; }",
        ".cut { stroke: #cc3311; stroke-width: 1.0; stroke-dasharray: 4 3; }",
        "</style>",
        f'<text class="title" x="{(width / 2)!r}" y="16.0">'
        f"{category}: explained variance by component</text>",
        f'<rect class="frame" x="{left!r}" y="{top!r}" '
        f'width="{plot_w!r}" height="{plot_h!r}"/>',
    ]
    if m > 1:
        coords = " ".join(f"{x!r},{y!r}" for x, y in points)
        parts.append(f'<polyline class="curve" points="{coords}"/>')
    for i, (x, y) in enumerate(points):
        parts.append(f'<circle class="pt" cx="{x!r}" cy="{y!r}" r="2.5"/>')
        parts.append(
            f'<text text-anchor="middle" x="{x!r}" '
            f'y="{(height - bottom + 14.0)!r}">{i + 1}</text>'
        )
    if chosen_dims < m:
        # Cut line between the last retained component and the next one.
        cut_x = (points[chosen_dims - 1][0] + points[chosen_dims][0]) / 2.0
        parts.append(
            f'<line class="cut" x1="{cut_x!r}" y1="{top!r}" '
            f'x2="{cut_x!r}" y2="{(top + plot_h)!r}"/>'
        )
    parts.append(
        f'<text text-anchor="middle" x="{(left + plot_w / 2)!r}" '
        f'y="{(height - 6.0)!r}">retained: {chosen_dims} of {m}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _percent_cell(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.1f}"


def emit_summary(
    profiles: dict[str, list[RadarProfile]],
    sweep_summaries: dict[str, dict],
    transform_reports: dict[str, dict],
    run_settings: dict | None = None,
) -> tuple[str, dict]:
    """Assemble the run report as (markdown text, JSON-ready dict).

    Categories present in `transform_reports` but missing profiles are
    reported as skipped, with the recorded reason. `run_settings` (window
    parameters, k overrides, and similar) is echoed verbatim when given.
    """
    categories = sorted(set(transform_reports) | set(profiles) | set(sweep_summaries))
    payload: dict = {"categories": {}}
    lines = ["# Gameplay style clustering report", ""]
    if run_settings:
        payload["settings"] = run_settings
        window = run_settings.get("window", {})
        if window:
            lines.append(
                f"Windows: width {window.get('width_seconds')}s, overlap "
                f"{window.get('overlap_seconds')}s, first "
                f"{window.get('count')} windows."
            )
        overrides = run_settings.get("k_overrides", {})
        if overrides:
            parts = ", ".join(f"{c}={k}" for c, k in sorted(overrides.items()))
            lines.append(f"Cluster-count overrides: {parts}.")
        if window or overrides:
            lines.append("")

    for category in categories:
        lines.append(f"## {category}")
        transform = transform_reports.get(category, {})
        skipped = transform.get("skipped")
        if skipped or category not in profiles:
            reason = skipped or "no clustering output for this category"
            payload["categories"][category] = {"skipped": reason}
            lines += [f"Skipped: {reason}", ""]
            continue

        sweep = sweep_summaries.get(category, {})
        cat_profiles = sorted(profiles[category], key=lambda p: p.cluster_id)
        total = sum(p.size for p in cat_profiles)
        lines.append(
            f"Sessions clustered: {total}; chosen k = {sweep.get('chosen_k')} "
            f"({sweep.get('mode', 'auto')}), average silhouette = "
            f"{sweep.get('avg_silhouette', float('nan')):.4f}"
        )
        lines.append("")
        lines.append("| cluster | size | " + " | ".join(cat_profiles[0].feature_names) + " |")
        lines.append("|" + "---|" * (2 + len(cat_profiles[0].feature_names)))
        for p in cat_profiles:
            cells = " | ".join(_percent_cell(v) for v in p.percents)
            lines.append(f"| {p.cluster_id} | {p.size} | {cells} |")
        lines.append("")
        cleaning = {
            "sessions_removed_by_filter": transform.get("sessions_removed_by_filter"),
            "outliers_removed": transform.get("outliers_removed"),
            "dropped_zero_variance": transform.get("dropped_zero_variance", []),
            "log_applied": transform.get("log_applied", []),
            "chosen_dims": transform.get("pca", {}).get("chosen_dims"),
        }
        lines.append(
            f"Cleaning: {cleaning['sessions_removed_by_filter']} sessions removed "
            f"by the validity filter, {cleaning['outliers_removed']} outlier "
            f"sessions removed, PCA dims = {cleaning['chosen_dims']}."
        )
        lines.append("")
        payload["categories"][category] = {
            "chosen_k": sweep.get("chosen_k"),
            "selection_mode": sweep.get("mode"),
            "avg_silhouette": sweep.get("avg_silhouette"),
            "cluster_sizes": {str(p.cluster_id): p.size for p in cat_profiles},
            "sessions_clustered": total,
            "profiles": [p.to_dict() for p in cat_profiles],
            "cleaning": cleaning,
        }

    return "\n".join(lines).rstrip() + "\n", payload


def summary_json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
