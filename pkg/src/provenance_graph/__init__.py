"""
Provenance Graph Package

This package contains the dynamic context provenance graph:
- DcpgGraph: incremental node/edge construction, memory annotation,
  rehydration and sink-time lineage queries
- DcpgNode / DcpgEdge: graph elements
- save_state / load_state: versioned JSON snapshots for cross-session audits
- memory_record_key / enrich_event: memory record identity and `_nt_taint`
  metadata for enriched traces
"""

from .graph import (
    CONTEXT_EDGE,
    PERSIST_EDGE,
    RECORD_KEY_ARG,
    TAINT_METADATA_KEY,
    DcpgEdge,
    DcpgGraph,
    DcpgNode,
    GraphError,
    NotAMemoryRead,
    NotAMemoryWrite,
    NotASink,
    OutOfOrderEvent,
    enrich_event,
    label_id_for,
    memory_record_key,
    node_id_for,
)
from .snapshot import (
    SNAPSHOT_VERSION,
    CorruptSnapshot,
    VersionMismatch,
    load_state,
    load_state_file,
    save_state,
    save_state_file,
)

__all__ = [
    "CONTEXT_EDGE",
    "PERSIST_EDGE",
    "SNAPSHOT_VERSION",
    "RECORD_KEY_ARG",
    "TAINT_METADATA_KEY",
    "CorruptSnapshot",
    "DcpgEdge",
    "DcpgGraph",
    "DcpgNode",
    "GraphError",
    "NotAMemoryRead",
    "NotAMemoryWrite",
    "NotASink",
    "OutOfOrderEvent",
    "VersionMismatch",
    "enrich_event",
    "label_id_for",
    "load_state",
    "load_state_file",
    "memory_record_key",
    "node_id_for",
    "save_state",
    "save_state_file",
]
