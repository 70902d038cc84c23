"""Read interaction logs (CSV, JSON array, NDJSON) into sessions of events."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator, Sequence

log = logging.getLogger(__name__)

FORMATS = ("csv", "json", "ndjson")


class IngestError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class IngestConfig:
    """Column (or JSON field) names for one dataset's schema."""

    session_col: str = "session_id"
    record_col: str = "record"
    time_col: str | None = None
    attr_col: str | None = None
    participant_col: str | None = None
    task_col: str | None = None
    format: str | None = None
    lenient: bool = False
    dataset: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IngestConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise IngestError(f"unknown ingest config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class Event:
    session_id: str
    ordinal: int
    record: str
    timestamp: str | None = None
    time_ms: float | None = None
    attribute: str | None = None
    participant: str | None = None
    task: str | None = None
    payload: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def get(self, key: str) -> Any:
        if key in ("session_id", "record", "timestamp", "attribute", "participant", "task"):
            value = getattr(self, key)
            if value is not None:
                return value
        return self.payload.get(key)


@dataclass(frozen=True)
class Session:
    session_id: str
    events: tuple[Event, ...]
    participant: str | None = None
    task: str | None = None

    def __post_init__(self) -> None:
        if not self.events:
            raise ValueError(f"session {self.session_id!r} has no events")
        if any(e.session_id != self.session_id for e in self.events):
            raise ValueError(f"session {self.session_id!r} holds events of another session")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def records(self) -> list[str]:
        return [e.record for e in self.events]


@dataclass(frozen=True)
class Rejected:
    line: int
    reason: str


@dataclass(frozen=True)
class EventLog:
    dataset: str
    sessions: tuple[Session, ...]
    rejected: tuple[Rejected, ...] = ()

    @property
    def distinct_records(self) -> frozenset[str]:
        return frozenset(e.record for s in self.sessions for e in s.events)

    @property
    def n_events(self) -> int:
        return sum(len(s) for s in self.sessions)

    def events(self) -> Iterator[Event]:
        for s in self.sessions:
            yield from s.events

    def session(self, session_id: str) -> Session:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        raise KeyError(session_id)


def parse_time(value: Any) -> float:
    """Epoch milliseconds from a number, a numeric string or an ISO-8601 string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp() * 1000.0


def _rows(path: Path, fmt: str) -> Iterator[tuple[int, dict[str, Any]]]:
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise IngestError(f"{path}: empty file")
            for row in reader:
                yield reader.line_num, row
    elif fmt == "json":
        text = path.read_text(encoding="utf-8")
        if not text.strip():
            raise IngestError(f"{path}: empty file")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: malformed JSON ({exc.msg})", exc.lineno) from None
        if isinstance(data, dict) and "events" in data:
            data = data["events"]
        if not isinstance(data, list):
            raise IngestError(f"{path}: expected a JSON array of objects")
        for i, row in enumerate(data, start=1):
            yield i, row
    elif fmt == "ndjson":
        with path.open(encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield i, json.loads(line)
                except json.JSONDecodeError as exc:
                    yield i, exc
    else:
        raise IngestError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def guess_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".ndjson", ".jsonl"):
        return "ndjson"
    if suffix == ".json":
        return "json"
    return "csv"


def _text(value: Any) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def ingest(path: str | Path, config: IngestConfig | None = None) -> EventLog:
    """Read ``path`` into an EventLog grouped by ``config.session_col``.

    Sessions keep first-appearance order.  Events are ordered by time when a
    time column is configured (ties keep file order), else by file order.
    Bad rows raise :class:`IngestError` unless ``config.lenient`` is set, in
    which case they are skipped and listed in ``EventLog.rejected``.
    """
    config = config or IngestConfig()
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: no such file")
    fmt = config.format or guess_format(path)

    required = [config.session_col, config.record_col]
    optional = [c for c in (config.time_col, config.attr_col, config.participant_col, config.task_col) if c]
    grouped: dict[str, list[tuple[float | None, int, Event]]] = {}
    rejected: list[Rejected] = []
    checked_columns = False
    seen_rows = 0

    for line, row in _rows(path, fmt):
        seen_rows += 1
        try:
            if isinstance(row, Exception):
                raise IngestError(f"malformed JSON ({row})", line)
            if not isinstance(row, dict):
                raise IngestError("expected an object", line)
            if not checked_columns and fmt == "csv":
                missing = [c for c in required + optional if c not in row]
                if missing:
                    raise IngestError(f"{path}: missing column(s) {', '.join(missing)}")
                checked_columns = True
            missing = [c for c in required if c not in row]
            if missing:
                raise IngestError(f"missing field(s) {', '.join(missing)}", line)
            session_id = _text(row[config.session_col])
            record = _text(row[config.record_col])
            if session_id is None or record is None:
                raise IngestError("empty session id or record", line)
            raw_time = _text(row.get(config.time_col)) if config.time_col else None
            time_ms = None
            if config.time_col:
                if raw_time is None:
                    raise IngestError(f"empty {config.time_col!r}", line)
                try:
                    time_ms = parse_time(raw_time)
                except ValueError:
                    raise IngestError(f"unparseable timestamp {raw_time!r}", line) from None
        except IngestError as exc:
            if config.lenient and exc.line is not None:
                rejected.append(Rejected(exc.line, str(exc)))
                log.warning("skipping %s", exc)
                continue
            raise
        event = Event(
            session_id=session_id,
            ordinal=-1,
            record=record,
            timestamp=raw_time,
            time_ms=time_ms,
            attribute=_text(row.get(config.attr_col)) if config.attr_col else None,
            participant=_text(row.get(config.participant_col)) if config.participant_col else None,
            task=_text(row.get(config.task_col)) if config.task_col else None,
            payload=dict(row),
        )
        bucket = grouped.setdefault(session_id, [])
        bucket.append((time_ms, len(bucket), event))

    if seen_rows == 0:
        raise IngestError(f"{path}: empty file")
    if not grouped:
        raise IngestError(f"{path}: every row was rejected")

    sessions = []
    for session_id, bucket in grouped.items():
        if config.time_col:
            bucket.sort(key=lambda t: (t[0], t[1]))
        events = tuple(replace(ev, ordinal=k) for k, (_, _, ev) in enumerate(bucket))
        sessions.append(Session(session_id, events, events[0].participant, events[0].task))
    return EventLog(config.dataset or path.stem, tuple(sessions), tuple(rejected))


def segment_sessions(log: EventLog, key: str | Sequence[str]) -> EventLog:
    """Re-partition events by the value(s) of ``key``; order within partitions is kept."""
    keys = [key] if isinstance(key, str) else list(key)
    if not keys:
        raise ValueError("segment_sessions needs at least one key")
    parts: dict[str, list[Event]] = {}
    for ev in log.events():
        values = []
        for k in keys:
            v = ev.get(k)
            if v is None:
                raise KeyError(f"unknown segmentation key {k!r} (absent on an event of session {ev.session_id!r})")
            values.append(str(v))
        parts.setdefault("/".join(values), []).append(ev)
    sessions = []
    for sid, events in parts.items():
        renumbered = tuple(replace(ev, session_id=sid, ordinal=i) for i, ev in enumerate(events))
        participants = {e.participant for e in renumbered}
        tasks = {e.task for e in renumbered}
        sessions.append(Session(
            sid,
            renumbered,
            participants.pop() if len(participants) == 1 else None,
            tasks.pop() if len(tasks) == 1 else None,
        ))
    return EventLog(log.dataset, tuple(sessions), log.rejected)


def events_from_records(records_by_session: dict[str, Sequence[str]], dataset: str = "inline") -> EventLog:
    """Small in-memory log; handy for tests and examples."""
    sessions = []
    for sid, records in records_by_session.items():
        events = tuple(Event(sid, i, r) for i, r in enumerate(records))
        sessions.append(Session(sid, events))
    return EventLog(dataset, tuple(sessions))
