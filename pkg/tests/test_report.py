"""Radar profiles, SVG rendering, and the run summary."""

import numpy as np
import pytest

from playstyles.errors import DataError
from playstyles.features import FeatureMatrix
from playstyles.report import (
    cluster_profiles,
    emit_summary,
    render_radar,
    render_scree,
    summary_json_text,
)


def _matrix(values, names=None, category="Action"):
    values = np.asarray(values, dtype=np.float64)
    names = names or [f"f{j}" for j in range(values.shape[1])]
    sids = [f"s{i:03d}" for i in range(values.shape[0])]
    return FeatureMatrix(category, list(names), sids, values)


def test_single_cluster_profiles_all_100():
    rng = np.random.default_rng(0)
    mat = _matrix(rng.uniform(1, 5, size=(10, 4)))
    profiles = cluster_profiles(mat, np.zeros(10, dtype=int))
    assert len(profiles) == 1
    assert profiles[0].size == 10
    for pct in profiles[0].percents:
        assert pct == pytest.approx(100.0, abs=1e-12)


def test_percent_is_cluster_over_population():
    mat = _matrix([[10.0], [30.0]], names=["builds"])
    profiles = cluster_profiles(mat, np.array([0, 1]))
    # population mean 20: cluster means 10 and 30 are 50% and 150%
    assert profiles[0].percents == [pytest.approx(50.0)]
    assert profiles[1].percents == [pytest.approx(150.0)]


def test_zero_cluster_mean_gives_zero_percent():
    mat = _matrix([[0.0], [8.0]], names=["deaths"])
    profiles = cluster_profiles(mat, np.array([0, 1]))
    assert profiles[0].percents == [pytest.approx(0.0)]


def test_zero_population_mean_gives_none():
    mat = _matrix([[0.0, 1.0], [0.0, 3.0]], names=["never", "seen"])
    profiles = cluster_profiles(mat, np.array([0, 1]))
    assert profiles[0].percents[0] is None
    assert profiles[1].percents[0] is None
    assert profiles[0].percents[1] is not None


def test_weighted_percent_mean_is_100():
    rng = np.random.default_rng(7)
    mat = _matrix(rng.uniform(0.5, 4, size=(60, 5)))
    labels = rng.integers(0, 3, size=60)
    profiles = cluster_profiles(mat, labels)
    total = sum(p.size for p in profiles)
    assert total == 60
    for j in range(5):
        weighted = sum(p.size * p.percents[j] for p in profiles) / total
        assert weighted == pytest.approx(100.0, abs=1e-9)


def test_profiles_mismatched_assignments_rejected():
    mat = _matrix([[1.0], [2.0]])
    with pytest.raises(DataError, match="assignments"):
        cluster_profiles(mat, np.array([0]))


def _profiles_for_svg(n_axes=4, clusters=2, seed=3):
    rng = np.random.default_rng(seed)
    mat = _matrix(rng.uniform(1, 3, size=(12, n_axes)))
    labels = np.arange(12) % clusters
    return cluster_profiles(mat, labels)


def test_render_radar_structure():
    profiles = _profiles_for_svg()
    svg = render_radar(profiles, radial_cap=300.0)
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    assert svg.count('class="panel"') == 2
    assert svg.count('class="ref-ring"') == 2  # one 100% ring per panel
    assert "cap 300%" in svg


def test_render_radar_requires_three_axes():
    profiles = _profiles_for_svg(n_axes=2)
    with pytest.raises(DataError, match="bar chart"):
        render_radar(profiles)


def test_render_radar_rejects_bad_cap():
    profiles = _profiles_for_svg()
    with pytest.raises(DataError, match="cap"):
        render_radar(profiles, radial_cap=0.0)


def test_render_radar_marks_overflow_at_cap():
    mat = _matrix([[100.0, 1.0, 1.0], [1.0, 1.0, 1.0]] * 3)
    profiles = cluster_profiles(mat, np.array([0, 1] * 3))
    svg = render_radar(profiles, radial_cap=150.0)
    assert 'class="capped"' in svg
    uncapped = render_radar(profiles, radial_cap=100000.0)
    assert 'class="capped"' not in uncapped


def test_render_radar_annotates_na_axes():
    mat = _matrix([[0.0, 1.0, 2.0], [0.0, 2.0, 1.0]])
    profiles = cluster_profiles(mat, np.array([0, 1]))
    svg = render_radar(profiles)
    assert "(n/a)" in svg
    assert 'class="axis na"' in svg


def test_render_radar_single_cluster_vertices_on_ref_ring():
    """With one cluster every percent is 100, so all vertices sit on the
    reference ring: each vertex radius equals the ring radius."""
    rng = np.random.default_rng(11)
    mat = _matrix(rng.uniform(1, 5, size=(9, 4)))
    profiles = cluster_profiles(mat, np.zeros(9, dtype=int))
    svg = render_radar(profiles, radial_cap=300.0)
    assert svg.count('class="panel"') == 1
    # ref ring radius = _RADIUS * 100 / cap; extract and compare vertices
    import re

    ring = re.search(r'class="ref-ring"[^/]*r="([0-9.]+)"', svg)
    assert ring is not None
    ring_r = float(ring.group(1))
    poly = re.search(r'class="profile" points="([^"]+)"', svg)
    assert poly is not None
    pts = [tuple(map(float, p.split(","))) for p in poly.group(1).split()]
    panel = re.search(r'data-cx="([0-9.]+)" data-cy="([0-9.]+)"', svg)
    cx, cy = float(panel.group(1)), float(panel.group(2))
    for x, y in pts:
        r = ((x - cx) ** 2 + (y - cy) ** 2) ** 0.5
        assert r == pytest.approx(ring_r, abs=1e-6)


def test_render_radar_byte_stable():
    profiles = _profiles_for_svg(seed=21)
    assert render_radar(profiles) == render_radar(profiles)


def test_render_scree_smoke():
    svg = render_scree([10.0, 9.0, 1.0, 0.9, 0.8], chosen_dims=2, category="Action")
    assert svg.startswith("<svg ")
    assert "retained: 2 of 5" in svg
    assert svg == render_scree([10.0, 9.0, 1.0, 0.9, 0.8], 2, "Action")
    with pytest.raises(DataError):
        render_scree([], 1, "Action")


def test_emit_summary_tables_and_skips():
    mat = _matrix([[1.0, 2.0, 4.0], [3.0, 2.0, 4.0]], category="Action")
    profiles = {"Action": cluster_profiles(mat, np.array([0, 1]))}
    sweeps = {"Action": {"chosen_k": 2, "mode": "auto", "avg_silhouette": 0.5}}
    transforms = {
        "Action": {
            "category": "Action",
            "sessions_removed_by_filter": 1,
            "outliers_removed": 2,
            "dropped_zero_variance": [],
            "log_applied": ["f0"],
            "pca": {"chosen_dims": 2, "selection_mode": "auto"},
        },
        "Feedback": {"category": "Feedback", "skipped": "only 3 rows after cleaning"},
    }
    settings = {
        "window": {"width_seconds": 300, "overlap_seconds": 30, "count": 2},
        "k_overrides": {"Action": 2},
    }
    markdown, payload = emit_summary(profiles, sweeps, transforms, settings)
    assert "## Action" in markdown
    assert "chosen k = 2 (auto)" in markdown
    assert "## Feedback" in markdown
    assert "only 3 rows after cleaning" in markdown
    assert "width 300s" in markdown
    assert "Action=2" in markdown
    assert payload["settings"] == settings
    assert "Feedback" in payload["categories"]
    assert payload["categories"]["Feedback"]["skipped"] == "only 3 rows after cleaning"
    # JSON text form is stable and sorted
    text = summary_json_text(payload)
    assert text == summary_json_text(payload)
    assert text.endswith("\n")
