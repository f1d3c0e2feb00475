"""Parse JSON Lines telemetry into per-session event sequences and windows.

Input format: one JSON object per line with fields

    session_id    string (numbers are coerced to strings)
    offset_seconds  non-negative number, seconds since session start
    timestamp     alternative to offset_seconds: epoch seconds or an ISO-8601
                  string; offsets are computed relative to the session's
                  earliest timestamped record
    event_name    string
    category      one of "Action" | "Feedback" | "Progression"
    data          optional flat object of scalar values

Malformed lines are rejected and tallied in a ParseReport, never fatal.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable

from .errors import ConfigError
from .events import CATEGORIES, Event, Session, Window

_SCALARS = (str, int, float, bool, type(None))


@dataclass
class ParseReport:
    """Line-level accounting for one parse run."""

    accepted: int = 0
    rejected: int = 0
    blank: int = 0
    sessions: int = 0
    rejected_reasons: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rejected += 1
        self.rejected_reasons[reason] = self.rejected_reasons.get(reason, 0) + 1

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "blank": self.blank,
            "sessions": self.sessions,
            "rejected_reasons": dict(sorted(self.rejected_reasons.items())),
        }


@dataclass(frozen=True)
class WindowConfig:
    """Width/overlap/count for time-window segmentation (seconds)."""

    width: float = 300.0
    overlap: float = 30.0
    count: int = 2

    def validate(self) -> None:
        if self.width <= 0:
            raise ConfigError(f"window.width_seconds must be > 0, got {self.width}")
        if self.overlap < 0:
            raise ConfigError(f"window.overlap_seconds must be >= 0, got {self.overlap}")
        if self.overlap >= self.width:
            raise ConfigError(
                f"window.overlap_seconds ({self.overlap}) must be smaller than "
                f"window.width_seconds ({self.width})"
            )
        if self.count < 1:
            raise ConfigError(f"window.count must be >= 1, got {self.count}")


@dataclass
class _RawRecord:
    offset: float | None
    timestamp: float | None
    name: str
    category: str
    payload: dict


def _parse_timestamp(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)) and math.isfinite(value):
        return float(value)
    if isinstance(value, str):
        try:
            dt = datetime.fromisoformat(value)
        except ValueError:
            return None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    return None


def _parse_line(text: str, report: ParseReport) -> tuple[str, _RawRecord] | None:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError:
        report.reject("invalid_json")
        return None
    if not isinstance(rec, dict):
        report.reject("not_an_object")
        return None

    sid = rec.get("session_id")
    if isinstance(sid, bool) or not isinstance(sid, (str, int)):
        report.reject("bad_session_id")
        return None
    sid = str(sid)

    name = rec.get("event_name")
    if not isinstance(name, str) or not name:
        report.reject("bad_event_name")
        return None

    category = rec.get("category")
    if category not in CATEGORIES:
        report.reject("unknown_category")
        return None

    offset = None
    timestamp = None
    if "offset_seconds" in rec:
        raw = rec["offset_seconds"]
        if isinstance(raw, bool) or not isinstance(raw, (int, float)) \
                or not math.isfinite(raw) or raw < 0:
            report.reject("bad_offset")
            return None
        offset = float(raw)
    elif "timestamp" in rec:
        timestamp = _parse_timestamp(rec["timestamp"])
        if timestamp is None:
            report.reject("bad_timestamp")
            return None
    else:
        report.reject("missing_time")
        return None

    payload = rec.get("data", {})
    if payload is None:
        payload = {}
    if not isinstance(payload, dict) or not all(
        isinstance(k, str) and isinstance(v, _SCALARS) for k, v in payload.items()
    ):
        report.reject("bad_payload")
        return None

    return sid, _RawRecord(offset, timestamp, name, category, payload)


def parse_events(stream: Iterable[str]) -> tuple[list[Session], ParseReport]:
    """Parse a line-oriented stream into Sessions, sorted by session id.

    Events within a session are sorted by time offset, stable on ties.
    Records carrying absolute timestamps get offsets relative to the
    session's earliest timestamped record. Empty input yields an empty list.
    """
    report = ParseReport()
    raw: dict[str, list[_RawRecord]] = {}
    for line in stream:
        text = line.strip()
        if not text:
            report.blank += 1
            continue
        parsed = _parse_line(text, report)
        if parsed is None:
            continue
        sid, rec = parsed
        raw.setdefault(sid, []).append(rec)
        report.accepted += 1

    sessions = []
    for sid in sorted(raw):
        records = raw[sid]
        stamped = [r.timestamp for r in records if r.timestamp is not None]
        t0 = min(stamped) if stamped else 0.0
        events = [
            Event(
                session_id=sid,
                time_offset=r.offset if r.offset is not None else r.timestamp - t0,
                name=r.name,
                category=r.category,
                payload=r.payload,
            )
            for r in records
        ]
        events.sort(key=lambda e: e.time_offset)  # stable: ties keep input order
        sessions.append(Session(id=sid, events=events))
    report.sessions = len(sessions)
    return sessions, report


def event_to_record(event: Event) -> dict:
    """Normalized JSON-serializable form of one event."""
    return {
        "session_id": event.session_id,
        "offset_seconds": event.time_offset,
        "event_name": event.name,
        "category": event.category,
        "data": event.payload,
    }


def write_events(sessions: Iterable[Session], fh: IO[str]) -> int:
    """Serialize sessions back to normalized JSON Lines. Returns line count."""
    n = 0
    for session in sessions:
        for event in session.events:
            fh.write(json.dumps(event_to_record(event)) + "\n")
            n += 1
    return n


def segment_windows(
    session: Session, width: float, overlap: float, count: int
) -> list[Window]:
    """Cut a session into overlapping [start, start+width) windows.

    Window i starts at i * (width - overlap). Events in the overlap region
    belong to both adjacent windows. Window 0 is always produced; windows
    beyond it are produced only while their start precedes the session
    duration, up to `count` windows total.
    """
    WindowConfig(width=width, overlap=overlap, count=count).validate()
    step = width - overlap
    duration = session.duration
    n = 1
    while n < count and n * step < duration:
        n += 1

    offsets = [e.time_offset for e in session.events]
    windows = []
    for i in range(n):
        start = i * step
        end = start + width
        lo = bisect_left(offsets, start)
        hi = bisect_left(offsets, end)
        windows.append(Window(index=i, start=start, end=end, events=session.events[lo:hi]))
    return windows
