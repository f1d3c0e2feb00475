"""Core event-stream types: events, sessions, time windows."""

from __future__ import annotations

from dataclasses import dataclass, field

# The three-way event taxonomy used throughout the pipeline.
CATEGORIES = ("Action", "Feedback", "Progression")


@dataclass(frozen=True)
class Event:
    """One telemetry record, timed in seconds relative to its session start."""

    session_id: str
    time_offset: float
    name: str
    category: str
    payload: dict = field(default_factory=dict)


@dataclass
class Session:
    """All events sharing one session id, sorted by time offset.

    Ties on time_offset keep input order. A session always holds at least
    one event; `duration` is the largest offset (0.0 for a lone event at 0).
    """

    id: str
    events: list[Event]

    @property
    def duration(self) -> float:
        return self.events[-1].time_offset if self.events else 0.0

    def action_event_count(self) -> int:
        """Whole-session count of Action-category events."""
        return sum(1 for e in self.events if e.category == "Action")


@dataclass
class Window:
    """A left-closed right-open [start, end) time slice of a session."""

    index: int
    start: float
    end: float
    events: list[Event]
