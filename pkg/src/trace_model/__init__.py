"""
Trace Model Package

This package contains the trace and policy data model:
- ToolEvent / TaintLabel / EventKind: recorded tool calls and provenance labels
- parse_trace / serialize_trace: line-delimited JSON trace codec
- Policy / ThresholdProfile: declarative source, sink and memory tool sets
- parse_policy / default_policy: YAML policy loading
- classify / classify_kinds: event roles under a policy
"""

from .events import (
    DuplicateIndex,
    EventKind,
    GapInIndices,
    MalformedLine,
    TaintLabel,
    ToolEvent,
    TraceError,
    find_trace_files,
    group_by_session,
    load_trace_file,
    parse_trace,
    serialize_trace,
)
from .policy import (
    InvalidThreshold,
    ParseError,
    Policy,
    PolicyError,
    ThresholdProfile,
    classify,
    classify_kinds,
    default_policy,
    load_policy_file,
    parse_policy,
)

__all__ = [
    "DuplicateIndex",
    "EventKind",
    "GapInIndices",
    "InvalidThreshold",
    "MalformedLine",
    "ParseError",
    "Policy",
    "PolicyError",
    "TaintLabel",
    "ThresholdProfile",
    "ToolEvent",
    "TraceError",
    "classify",
    "classify_kinds",
    "default_policy",
    "find_trace_files",
    "group_by_session",
    "load_policy_file",
    "load_trace_file",
    "parse_policy",
    "parse_trace",
    "serialize_trace",
]
