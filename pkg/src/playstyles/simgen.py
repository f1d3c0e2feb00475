"""Synthetic telemetry generator for pipeline exercises and regression tests.

Sessions are drawn from a mixture of archetypes, each with its own duration
band and per-minute event rates. Generation is deterministic for a fixed
seed, and independent per session: session i uses default_rng((seed, i)), so
inserting or removing archetypes never shifts other sessions' streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .events import CATEGORIES, Event, Session

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Archetype:
    """A gameplay style to simulate.

    rates_per_minute maps event names to expected occurrences per minute of
    play. Event counts are Poisson(rate * duration / 60); offsets are uniform
    over the session.
    """

    name: str
    weight: float
    duration_range: tuple[float, float]
    rates_per_minute: dict[str, float] = field(default_factory=dict)

    def validate(self, event_categories: dict[str, str]) -> None:
        if not self.name:
            raise ConfigError("archetype name must be non-empty")
        if not (self.weight > 0):
            raise ConfigError(f"archetype {self.name}: weight must be > 0")
        lo, hi = self.duration_range
        if not (0 < lo <= hi) or not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(
                f"archetype {self.name}: duration_range must satisfy 0 < lo <= hi"
            )
        for event_name, rate in self.rates_per_minute.items():
            if event_name not in event_categories:
                raise ConfigError(
                    f"archetype {self.name}: event {event_name!r} missing from "
                    "event_categories"
                )
            if rate < 0 or not math.isfinite(rate):
                raise ConfigError(
                    f"archetype {self.name}: rate for {event_name!r} must be "
                    "finite and >= 0"
                )


@dataclass(frozen=True)
class GeneratorConfig:
    n_sessions: int
    seed: int
    event_categories: dict[str, str]
    archetypes: tuple[Archetype, ...]

    def validate(self) -> None:
        if self.n_sessions < 1:
            raise ConfigError("n_sessions must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if not self.archetypes:
            raise ConfigError("at least one archetype is required")
        for event_name, category in self.event_categories.items():
            if category not in CATEGORIES:
                raise ConfigError(
                    f"event_categories[{event_name!r}]: unknown category "
                    f"{category!r}, expected one of {', '.join(CATEGORIES)}"
                )
        names = [a.name for a in self.archetypes]
        if len(set(names)) != len(names):
            raise ConfigError("archetype names must be unique")
        for archetype in self.archetypes:
            archetype.validate(self.event_categories)
        total = sum(a.weight for a in self.archetypes)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ConfigError(
                f"archetype weights must sum to 1.0, got {total!r}"
            )


def generate(config: GeneratorConfig) -> tuple[list[Session], list[str]]:
    """Draw sessions from the archetype mixture.

    Returns (sessions, archetype_labels), both indexed by session order.
    Session ids are s00000, s00001, ... so lexicographic order matches
    generation order.
    """
    config.validate()
    weights = np.array([a.weight for a in config.archetypes], dtype=np.float64)
    weights = weights / weights.sum()

    sessions = []
    labels = []
    for i in range(config.n_sessions):
        rng = np.random.default_rng((config.seed, i))
        archetype = config.archetypes[rng.choice(len(weights), p=weights)]
        lo, hi = archetype.duration_range
        duration = float(rng.uniform(lo, hi))

        events = []
        # Stable name order keeps the draw sequence independent of dict churn.
        for event_name in sorted(archetype.rates_per_minute):
            rate = archetype.rates_per_minute[event_name]
            count = int(rng.poisson(rate * duration / 60.0))
            offsets = rng.uniform(0.0, duration, size=count)
            category = config.event_categories[event_name]
            for offset in offsets:
                events.append(
                    Event(
                        session_id=f"s{i:05d}",
                        time_offset=float(offset),
                        name=event_name,
                        category=category,
                        payload={},
                    )
                )
        events.append(
            Event(
                session_id=f"s{i:05d}",
                time_offset=duration,
                name="session_end",
                category="Progression",
                payload={},
            )
        )
        events.sort(key=lambda e: e.time_offset)
        sessions.append(Session(id=f"s{i:05d}", events=events))
        labels.append(archetype.name)
    return sessions, labels


def majority_label_purity(
    cluster_ids: list[int], true_labels: list[str]
) -> float:
    """Fraction of items whose cluster's majority true label matches theirs."""
    if len(cluster_ids) != len(true_labels):
        raise ConfigError("cluster_ids and true_labels must align")
    if not cluster_ids:
        raise ConfigError("purity of an empty assignment is undefined")
    counts: dict[int, dict[str, int]] = {}
    for cid, label in zip(cluster_ids, true_labels):
        counts.setdefault(cid, {}).setdefault(label, 0)
        counts[cid][label] += 1
    matched = sum(max(by_label.values()) for by_label in counts.values())
    return matched / len(cluster_ids)
