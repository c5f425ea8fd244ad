"""
Detection policy: source/sink/memory tool sets, threshold profile, and
event classification.
"""

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Union

import yaml

from .events import EventKind, ToolEvent

logger = logging.getLogger(__name__)

DEFAULT_POLICY_PATH = Path(__file__).parent.parent.parent / "config" / "default_policy.yaml"


class PolicyError(Exception):
    """Base class for policy failures."""


class ParseError(PolicyError):
    pass


class InvalidThreshold(PolicyError):
    def __init__(self, name: str, value: object):
        self.name = name
        self.value = value
        super().__init__(f"Threshold {name!r} must lie in [0, 1], got {value!r}")


# Shipped catalogue, grouped by tool family.
DEFAULT_SOURCES = frozenset(
    {
        # web search
        "tavily_search", "web_search", "web_search_tool", "SerperDevTool",
        # http / document retrieval
        "scrape_url", "document_search", "retrieve_document", "retrieve_documents",
        # email
        "read_email",
        # memory / rag recall
        "memory_recall", "memory_retrieve",
        # trusted / internal
        "internal_kb_search", "internal_file_read", "internal_kb",
        # framework-specific search
        "search_docs", "knowledge_search", "search_tool", "research_search",
        # browser
        "web_browse", "browser_open", "browser_extract",
    }
)

DEFAULT_SINKS = frozenset(
    {
        # code execution
        "execute_code", "execute_python", "execute_setup", "python_repl_tool",
        "PythonInterpreter",
        # http / external
        "http_exfil", "http_post", "data_archive_api", "webhook_post",
        "cloud_storage_upload",
        # email
        "send_email", "forward_email",
        # file write
        "write_report", "FileWriterTool",
        # workflow / business
        "calendar_create_event", "crm_update_lead", "git_push_changes",
        "ticket_create", "slack_post_message", "notebook_publish",
    }
)

DEFAULT_MEMORY_WRITES = frozenset({"store_in_memory", "store_document", "memory_store"})
DEFAULT_MEMORY_READS = frozenset({"memory_recall", "memory_retrieve", "load_memory"})
DEFAULT_TRUSTED_SOURCES = frozenset({"internal_kb_search", "internal_file_read", "internal_kb"})

# YAML key -> ThresholdProfile attribute
THRESHOLD_KEYS = {
    "string_match": "theta_str",
    "implicit_string": "theta_str_impl",
    "semantic": "theta_sem",
    "rag_semantic": "theta_sem_rag",
    "coverage": "theta_cov",
    "safe_semantic": "theta_safe",
}

POLICY_KEYS = frozenset(
    {
        "sources",
        "sinks",
        "memory_writes",
        "memory_reads",
        "trusted_sources",
        "thresholds",
        "chunk_sentences",
        "placeholders",
    }
)


@dataclass(frozen=True)
class ThresholdProfile:
    theta_str: float = 0.15
    theta_str_impl: float = 0.40
    theta_sem: float = 0.60
    theta_sem_rag: float = 0.85
    theta_cov: float = 0.10
    theta_safe: float = 0.95

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise InvalidThreshold(f.name, value)


@dataclass(frozen=True)
class Policy:
    sources: FrozenSet[str] = DEFAULT_SOURCES
    sinks: FrozenSet[str] = DEFAULT_SINKS
    memory_writes: FrozenSet[str] = frozenset()
    memory_reads: FrozenSet[str] = frozenset()
    trusted_sources: FrozenSet[str] = frozenset()
    thresholds: ThresholdProfile = field(default_factory=ThresholdProfile)
    chunk_sentences: int = 3
    placeholders: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.chunk_sentences < 1:
            raise ParseError(f"chunk_sentences must be positive, got {self.chunk_sentences}")

    def with_thresholds(self, **overrides: float) -> "Policy":
        """Copy of the policy with some threshold values replaced."""
        current = {f.name: getattr(self.thresholds, f.name) for f in fields(ThresholdProfile)}
        current.update(overrides)
        return Policy(
            sources=self.sources,
            sinks=self.sinks,
            memory_writes=self.memory_writes,
            memory_reads=self.memory_reads,
            trusted_sources=self.trusted_sources,
            thresholds=ThresholdProfile(**current),
            chunk_sentences=self.chunk_sentences,
            placeholders=self.placeholders,
        )


def default_policy() -> Policy:
    """The shipped policy: full catalogue, memory tools and trusted sources."""
    return Policy(
        memory_writes=DEFAULT_MEMORY_WRITES,
        memory_reads=DEFAULT_MEMORY_READS,
        trusted_sources=DEFAULT_TRUSTED_SOURCES,
    )


def _tool_set(doc: dict, key: str, default: FrozenSet[str]) -> FrozenSet[str]:
    if key not in doc or doc[key] is None:
        return default
    value = doc[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ParseError(f"Policy key {key!r} must be a list of tool names")
    return frozenset(value)


def _threshold_value(name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidThreshold(name, value)
    if not 0.0 <= float(value) <= 1.0:
        raise InvalidThreshold(name, value)
    return float(value)


def parse_policy(text: str) -> Policy:
    """
    Parse a YAML policy document.

    Omitted thresholds take the default profile, omitted memory/trusted sets
    are empty, omitted sources/sinks fall back to the shipped catalogue.

    Raises:
        ParseError: document is not a YAML mapping or has bad keys
        InvalidThreshold: a threshold lies outside [0, 1]
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParseError(f"Invalid policy YAML: {e}")
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ParseError("Policy document must be a mapping")
    unknown = sorted(str(k) for k in doc if k not in POLICY_KEYS)
    if unknown:
        raise ParseError(f"Unknown policy keys: {', '.join(unknown)}")

    raw_thresholds = doc.get("thresholds") or {}
    if not isinstance(raw_thresholds, dict):
        raise ParseError("Policy key 'thresholds' must be a mapping")
    threshold_values = {}
    for key, value in raw_thresholds.items():
        if key not in THRESHOLD_KEYS:
            raise ParseError(f"Unknown threshold {key!r}")
        threshold_values[THRESHOLD_KEYS[key]] = _threshold_value(key, value)

    chunk_sentences = doc.get("chunk_sentences", 3)
    if isinstance(chunk_sentences, bool) or not isinstance(chunk_sentences, int):
        raise ParseError("chunk_sentences must be an integer")

    placeholders = doc.get("placeholders") or {}
    if not isinstance(placeholders, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in placeholders.items()
    ):
        raise ParseError("Policy key 'placeholders' must map tool names to text")

    policy = Policy(
        sources=_tool_set(doc, "sources", DEFAULT_SOURCES),
        sinks=_tool_set(doc, "sinks", DEFAULT_SINKS),
        memory_writes=_tool_set(doc, "memory_writes", frozenset()),
        memory_reads=_tool_set(doc, "memory_reads", frozenset()),
        trusted_sources=_tool_set(doc, "trusted_sources", frozenset()),
        thresholds=ThresholdProfile(**threshold_values),
        chunk_sentences=chunk_sentences,
        placeholders=dict(placeholders),
    )
    logger.debug(
        f"Loaded policy: {len(policy.sources)} sources, {len(policy.sinks)} sinks"
    )
    return policy


def load_policy_file(path: Optional[Union[str, Path]]) -> Policy:
    """Load a policy file; no path means config/default_policy.yaml."""
    policy_path = Path(path) if path else DEFAULT_POLICY_PATH
    if not policy_path.exists():
        raise FileNotFoundError(f"Policy file not found: {policy_path}")
    return parse_policy(policy_path.read_text(encoding="utf-8"))


def classify_kinds(event: ToolEvent, policy: Policy) -> FrozenSet[EventKind]:
    """Every role the event's tool plays under the policy."""
    tool = event.tool_name
    kinds = set()
    if tool in policy.sources:
        kinds.add(EventKind.SOURCE)
    if tool in policy.sinks:
        kinds.add(EventKind.SINK)
    if tool in policy.memory_writes:
        kinds.add(EventKind.MEMORY_WRITE)
    if tool in policy.memory_reads:
        kinds.add(EventKind.MEMORY_READ)
    return frozenset(kinds) if kinds else frozenset({EventKind.OTHER})


_PRECEDENCE = (
    EventKind.SOURCE,
    EventKind.SINK,
    EventKind.MEMORY_WRITE,
    EventKind.MEMORY_READ,
)


def classify(event: ToolEvent, policy: Policy) -> EventKind:
    """Primary role of the event; use classify_kinds for all roles."""
    kinds = classify_kinds(event, policy)
    for kind in _PRECEDENCE:
        if kind in kinds:
            return kind
    return EventKind.OTHER
