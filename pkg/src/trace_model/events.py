"""
Trace data model and line-delimited JSON trace parsing.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

logger = logging.getLogger(__name__)


class TraceError(Exception):
    """Base class for trace parsing failures."""


class MalformedLine(TraceError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"Malformed trace line {line_no}: {reason}")


class DuplicateIndex(TraceError):
    def __init__(self, session: str, index: int):
        self.session = session
        self.index = index
        super().__init__(f"Duplicate index {index} in session {session!r}")


class GapInIndices(TraceError):
    def __init__(self, session: str, expected: int, found: int):
        self.session = session
        self.expected = expected
        self.found = found
        super().__init__(
            f"Gap in session {session!r}: expected index {expected}, found {found}"
        )


class EventKind(str, Enum):
    SOURCE = "Source"
    SINK = "Sink"
    MEMORY_WRITE = "MemoryWrite"
    MEMORY_READ = "MemoryRead"
    OTHER = "Other"


@dataclass(frozen=True)
class ToolEvent:
    """One recorded tool call."""

    session_id: str
    index: int
    tool_name: str
    args: Dict[str, str] = field(default_factory=dict)
    result: str = ""
    timestamp: Optional[str] = None

    @property
    def ref(self) -> tuple:
        return (self.session_id, self.index)

    def to_record(self) -> Dict[str, object]:
        record = {
            "session_id": self.session_id,
            "index": self.index,
            "tool_name": self.tool_name,
            "args": dict(self.args),
            "result": self.result,
        }
        if self.timestamp is not None:
            record["timestamp"] = self.timestamp
        return record


@dataclass(frozen=True)
class TaintLabel:
    """
    Provenance marker binding content to the source event it came from.

    `fragment` keeps the source content (canary included) so the label can
    still be compared at a sink after it was persisted and rehydrated.
    """

    id: str
    source_session: str
    source_index: int
    origin_tool: str
    confidence: float = 1.0
    canary: Optional[str] = None
    fragment: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"Label confidence out of range: {self.confidence}")

    def to_record(self) -> Dict[str, object]:
        return {
            "id": self.id,
            "source_session": self.source_session,
            "source_index": self.source_index,
            "origin_tool": self.origin_tool,
            "confidence": self.confidence,
            "canary": self.canary,
            "fragment": self.fragment,
        }

    @classmethod
    def from_record(cls, record: Dict[str, object]) -> "TaintLabel":
        return cls(
            id=str(record["id"]),
            source_session=str(record["source_session"]),
            source_index=int(record["source_index"]),
            origin_tool=str(record["origin_tool"]),
            confidence=float(record.get("confidence", 1.0)),
            canary=record.get("canary"),
            fragment=str(record.get("fragment", "")),
        )


def _parse_line(line_no: int, line: str) -> ToolEvent:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedLine(line_no, f"invalid JSON ({e.msg})")
    if not isinstance(record, dict):
        raise MalformedLine(line_no, "record is not an object")
    for key in ("session_id", "index", "tool_name", "args", "result"):
        if key not in record:
            raise MalformedLine(line_no, f"missing field {key!r}")

    session_id = record["session_id"]
    index = record["index"]
    tool_name = record["tool_name"]
    args = record["args"]
    result = record["result"]
    timestamp = record.get("timestamp")

    if not isinstance(session_id, str):
        raise MalformedLine(line_no, "session_id must be a string")
    if isinstance(index, bool) or not isinstance(index, int) or index < 0:
        raise MalformedLine(line_no, "index must be a non-negative integer")
    if not isinstance(tool_name, str) or not tool_name:
        raise MalformedLine(line_no, "tool_name must be a non-empty string")
    if not isinstance(args, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in args.items()
    ):
        raise MalformedLine(line_no, "args must map strings to strings")
    if not isinstance(result, str):
        raise MalformedLine(line_no, "result must be a string")
    if timestamp is not None and not isinstance(timestamp, str):
        raise MalformedLine(line_no, "timestamp must be a string")

    return ToolEvent(
        session_id=session_id,
        index=index,
        tool_name=tool_name,
        args=args,
        result=result,
        timestamp=timestamp,
    )


def parse_trace(data: Union[bytes, str]) -> List[ToolEvent]:
    """
    Parse a line-delimited JSON trace.

    Events come back grouped by session (sessions in order of first
    appearance) and ordered by index. Any malformed line rejects the file.

    Raises:
        MalformedLine, DuplicateIndex, GapInIndices
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedLine(0, f"trace is not valid UTF-8 ({e.reason})")

    parsed: List[ToolEvent] = []
    # records are newline-delimited; U+2028, U+2029 and NEL may appear raw inside strings
    for line_no, line in enumerate(data.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        parsed.append(_parse_line(line_no, line))
    sessions = group_by_session(parsed)

    events: List[ToolEvent] = []
    for session_id, session_events in sessions.items():
        session_events.sort(key=lambda e: e.index)
        seen = set()
        for expected, event in enumerate(session_events):
            if event.index in seen:
                raise DuplicateIndex(session_id, event.index)
            seen.add(event.index)
            if event.index != expected:
                raise GapInIndices(session_id, expected, event.index)
        events.extend(session_events)

    logger.debug(f"Parsed {len(events)} events across {len(sessions)} sessions")
    return events


def serialize_trace(events: Iterable[ToolEvent]) -> bytes:
    """Serialize events to the line-delimited JSON trace format."""
    lines = [json.dumps(e.to_record(), ensure_ascii=False) for e in events]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def group_by_session(events: Iterable[ToolEvent]) -> Dict[str, List[ToolEvent]]:
    grouped: Dict[str, List[ToolEvent]] = {}
    for event in events:
        grouped.setdefault(event.session_id, []).append(event)
    return grouped


def load_trace_file(path: Union[str, Path]) -> List[ToolEvent]:
    """Read and parse a `.jsonl` trace file."""
    trace_path = Path(path)
    if not trace_path.exists():
        raise FileNotFoundError(f"Trace file not found: {trace_path}")
    return parse_trace(trace_path.read_bytes())


def find_trace_files(path: Union[str, Path]) -> List[Path]:
    """A file is returned as-is; a directory yields its `.jsonl` files sorted."""
    trace_path = Path(path)
    if trace_path.is_dir():
        return sorted(trace_path.glob("*.jsonl"))
    return [trace_path]
