"""
Versioned JSON snapshots of the provenance graph and taint registry.
"""

import json
import logging
from pathlib import Path
from typing import Union

from ..trace_model import EventKind, TaintLabel
from .graph import DcpgGraph, DcpgNode, GraphError

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


class VersionMismatch(GraphError):
    def __init__(self, found: object):
        self.found = found
        super().__init__(f"Unsupported snapshot version {found!r}, expected {SNAPSHOT_VERSION}")


class CorruptSnapshot(GraphError):
    pass


def save_state(graph: DcpgGraph) -> bytes:
    """Serialize nodes, edges, registry and memory annotations."""
    document = {"version": SNAPSHOT_VERSION}
    document.update(graph.export())
    return json.dumps(document, sort_keys=True, ensure_ascii=False, indent=1).encode("utf-8")


def _require(condition: bool, message: str):
    if not condition:
        raise CorruptSnapshot(message)


def load_state(data: Union[bytes, str]) -> DcpgGraph:
    """
    Rebuild a graph from a snapshot; new events append to it.

    Raises:
        VersionMismatch: the version field is missing or unknown
        CorruptSnapshot: malformed document or dangling references
    """
    try:
        document = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptSnapshot(f"Snapshot is not valid JSON: {e}")
    _require(isinstance(document, dict), "Snapshot must be a JSON object")
    if document.get("version") != SNAPSHOT_VERSION:
        raise VersionMismatch(document.get("version"))
    for key in ("nodes", "edges", "taint_registry", "memory_annotations"):
        _require(key in document, f"Snapshot lacks {key!r}")

    graph = DcpgGraph()
    try:
        for record in document["taint_registry"]:
            label = TaintLabel.from_record(record)
            graph.taint_registry[label.id] = label

        for record in document["nodes"]:
            node = DcpgNode(
                node_id=record["node_id"],
                session_id=record["session_id"],
                event_index=int(record["event_index"]),
                tool_name=record["tool_name"],
                args_digest=record["args_digest"],
                kinds=frozenset(EventKind(k) for k in record["kinds"]),
                taint_set=set(record["taint_set"]),
            )
            for label_id in node.taint_set:
                _require(label_id in graph.taint_registry, f"Dangling label {label_id!r}")
            graph._add_node(node)

        for record in document["edges"]:
            u, v, label_id = record["from_node"], record["to_node"], record["label_id"]
            _require(graph.has_node(u) and graph.has_node(v), f"Dangling edge {u}->{v}")
            _require(label_id in graph.taint_registry, f"Dangling label {label_id!r}")
            graph.graph.add_edge(
                u, v, key=label_id, tier=record["tier"], confidence=float(record["confidence"])
            )

        annotations = document["memory_annotations"]
        writers = document.get("memory_writers", {})
        _require(isinstance(annotations, dict), "memory_annotations must be an object")
        _require(isinstance(writers, dict), "memory_writers must be an object")
        for key, labels in annotations.items():
            _require(isinstance(labels, list), f"Memory record {key!r} must list labels")
            for label_id in labels:
                _require(label_id in graph.taint_registry, f"Dangling label {label_id!r}")
            graph.memory_annotations[key] = frozenset(labels)
        for key, writer in writers.items():
            _require(graph.has_node(writer), f"Dangling memory writer {writer!r}")
            graph.memory_writers[key] = writer
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise CorruptSnapshot(f"Malformed snapshot record: {e}")

    for label_id in graph.taint_registry:
        _require(
            graph.has_node(graph.origin_node(label_id)),
            f"Label {label_id!r} has no origin node",
        )
    logger.info(
        f"Loaded snapshot: {graph.graph.number_of_nodes()} nodes, "
        f"{len(graph.taint_registry)} labels, {len(graph.memory_annotations)} memory records"
    )
    return graph


def save_state_file(graph: DcpgGraph, path: Union[str, Path]):
    Path(path).write_bytes(save_state(graph))


def load_state_file(path: Union[str, Path]) -> DcpgGraph:
    snapshot_path = Path(path)
    if not snapshot_path.exists():
        raise FileNotFoundError(f"Snapshot not found: {snapshot_path}")
    return load_state(snapshot_path.read_bytes())
