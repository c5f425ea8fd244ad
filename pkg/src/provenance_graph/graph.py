"""
Dynamic context provenance graph: tool-call nodes joined by taint-carrying
edges, with memory-boundary annotations for cross-session lineage.
"""

import bisect
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from ..trace_model import EventKind, TaintLabel, ToolEvent

logger = logging.getLogger(__name__)

TAINT_METADATA_KEY = "_nt_taint"
RECORD_KEY_ARG = "record_key"

CONTEXT_EDGE = "context"
PERSIST_EDGE = "persist"


class GraphError(Exception):
    """Base class for provenance graph failures."""


class OutOfOrderEvent(GraphError):
    def __init__(self, session: str, expected: int, found: int):
        self.session = session
        self.expected = expected
        self.found = found
        super().__init__(
            f"Out-of-order event in session {session!r}: expected index {expected}, got {found}"
        )


class NotAMemoryWrite(GraphError):
    pass


class NotAMemoryRead(GraphError):
    pass


class NotASink(GraphError):
    pass


@dataclass
class DcpgNode:
    node_id: str
    session_id: str
    event_index: int
    tool_name: str
    args_digest: str
    kinds: FrozenSet[EventKind]
    taint_set: Set[str] = field(default_factory=set)

    def to_record(self) -> Dict[str, object]:
        return {
            "node_id": self.node_id,
            "session_id": self.session_id,
            "event_index": self.event_index,
            "tool_name": self.tool_name,
            "args_digest": self.args_digest,
            "kinds": sorted(k.value for k in self.kinds),
            "taint_set": sorted(self.taint_set),
        }


@dataclass(frozen=True)
class DcpgEdge:
    from_node: str
    to_node: str
    label_id: str
    tier: str
    confidence: float

    def to_record(self) -> Dict[str, object]:
        return {
            "from_node": self.from_node,
            "to_node": self.to_node,
            "label_id": self.label_id,
            "tier": self.tier,
            "confidence": self.confidence,
        }


def node_id_for(session_id: str, index: int) -> str:
    return f"{session_id}/{index}"


def label_id_for(session_id: str, index: int) -> str:
    return f"{session_id}:{index}"


def args_digest(event: ToolEvent) -> str:
    payload = json.dumps(
        {"args": event.args, "result": event.result}, sort_keys=True, ensure_ascii=False
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _content_key(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def memory_record_key(event: ToolEvent, kind: EventKind) -> str:
    """
    The memory record an event writes or reads.

    An explicit `record_key` argument wins; otherwise writes are keyed by a
    hash of the written value and reads by a hash of the returned value, so
    reads of identical content still line up with the write.
    """
    explicit = event.args.get(RECORD_KEY_ARG)
    if explicit:
        return explicit
    if kind == EventKind.MEMORY_WRITE:
        written = "\n".join(
            v for k, v in event.args.items() if k not in (RECORD_KEY_ARG, TAINT_METADATA_KEY)
        )
        return _content_key(written)
    return _content_key(event.result)


class DcpgGraph:
    """
    Provenance graph over tool-call events.

    Single writer: record/annotate/rehydrate calls must be serialized. Once
    no more events are recorded, lineage queries may run concurrently.
    """

    def __init__(self):
        self.graph = nx.MultiDiGraph()
        self.taint_registry: Dict[str, TaintLabel] = {}
        self.memory_annotations: Dict[str, FrozenSet[str]] = {}
        self.memory_writers: Dict[str, str] = {}
        self._session_order: Dict[str, int] = {}
        self._next_index: Dict[str, int] = {}
        self._tainted: Dict[str, List[Tuple[int, str]]] = {}

    # -- accessors -------------------------------------------------------

    def node(self, node_id: str) -> DcpgNode:
        return self.graph.nodes[node_id]["data"]

    def nodes(self) -> List[DcpgNode]:
        return [data["data"] for _, data in self.graph.nodes(data=True)]

    def edges(self) -> List[DcpgEdge]:
        return [
            DcpgEdge(u, v, key, data["tier"], data["confidence"])
            for u, v, key, data in self.graph.edges(keys=True, data=True)
        ]

    def has_node(self, node_id: str) -> bool:
        return self.graph.has_node(node_id)

    def order_key(self, node_id: str) -> Tuple[int, int]:
        node = self.node(node_id)
        return (self._session_order[node.session_id], node.event_index)

    def origin_node(self, label_id: str) -> str:
        label = self.taint_registry[label_id]
        return node_id_for(label.source_session, label.source_index)

    def next_index(self, session_id: str) -> int:
        return self._next_index.get(session_id, 0)

    # -- construction ----------------------------------------------------

    def _add_node(self, node: DcpgNode):
        self._session_order.setdefault(node.session_id, len(self._session_order))
        self.graph.add_node(node.node_id, data=node)
        self._next_index[node.session_id] = max(
            self._next_index.get(node.session_id, 0), node.event_index + 1
        )
        if node.taint_set:
            self._mark_tainted(node)

    def _mark_tainted(self, node: DcpgNode):
        tainted = self._tainted.setdefault(node.session_id, [])
        entry = (node.event_index, node.node_id)
        position = bisect.bisect_left(tainted, entry)
        if position == len(tainted) or tainted[position] != entry:
            tainted.insert(position, entry)

    def _add_edge(self, u: str, v: str, label_id: str, tier: str, confidence: float):
        if not self.graph.has_edge(u, v, key=label_id):
            self.graph.add_edge(u, v, key=label_id, tier=tier, confidence=confidence)

    def record_event(
        self,
        event: ToolEvent,
        kinds: Iterable[EventKind],
        canary: Optional[str] = None,
        fragment: Optional[str] = None,
    ) -> str:
        """
        Add the node for an event.

        Source events get a fresh label (confidence 1.0). Every earlier
        tainted node of the same session gets an edge to the new node for
        each label it holds; the new node accumulates those labels unless it
        is a source, whose taint set starts as its own label only.

        Raises:
            OutOfOrderEvent: the event is not the next index of its session
        """
        kinds = frozenset(kinds)
        expected = self.next_index(event.session_id)
        if event.index != expected:
            raise OutOfOrderEvent(event.session_id, expected, event.index)

        node_id = node_id_for(event.session_id, event.index)
        node = DcpgNode(
            node_id=node_id,
            session_id=event.session_id,
            event_index=event.index,
            tool_name=event.tool_name,
            args_digest=args_digest(event),
            kinds=kinds,
        )

        incoming: Set[str] = set()
        context = list(self._tainted.get(event.session_id, []))
        for _, earlier_id in context:
            for label_id in self.node(earlier_id).taint_set:
                incoming.add(label_id)

        if EventKind.SOURCE in kinds:
            label = TaintLabel(
                id=label_id_for(event.session_id, event.index),
                source_session=event.session_id,
                source_index=event.index,
                origin_tool=event.tool_name,
                confidence=1.0,
                canary=canary,
                fragment=event.result if fragment is None else fragment,
            )
            self.taint_registry[label.id] = label
            node.taint_set = {label.id}
        else:
            node.taint_set = set(incoming)

        self._add_node(node)
        for _, earlier_id in context:
            earlier = self.node(earlier_id)
            for label_id in sorted(earlier.taint_set):
                confidence = self.taint_registry[label_id].confidence
                self._add_edge(earlier_id, node_id, label_id, CONTEXT_EDGE, confidence)

        logger.debug(
            f"Recorded {node_id} ({event.tool_name}) kinds={sorted(k.value for k in kinds)} "
            f"taint={sorted(node.taint_set)}"
        )
        return node_id

    def annotate_memory_write(self, node_id: str, record_key: str) -> FrozenSet[str]:
        """
        Store the writing node's labels under a memory record key.

        A later write to the same key replaces the annotation.

        Raises:
            NotAMemoryWrite
        """
        node = self.node(node_id)
        if EventKind.MEMORY_WRITE not in node.kinds:
            raise NotAMemoryWrite(f"{node_id} is not a memory write")
        labels = frozenset(node.taint_set)
        self.memory_annotations[record_key] = labels
        self.memory_writers[record_key] = node_id
        logger.debug(f"Annotated memory key {record_key!r} with {sorted(labels)}")
        return labels

    def rehydrate_on_read(self, node_id: str, record_key: str) -> FrozenSet[str]:
        """
        Restore persisted labels onto a memory-read node.

        Adds a persist edge from the writing node for each restored label.
        Rehydration never produces a finding by itself.

        Raises:
            NotAMemoryRead
        """
        node = self.node(node_id)
        if EventKind.MEMORY_READ not in node.kinds:
            raise NotAMemoryRead(f"{node_id} is not a memory read")
        labels = self.memory_annotations.get(record_key, frozenset())
        if not labels:
            return frozenset()

        writer_id = self.memory_writers.get(record_key)
        node.taint_set |= labels
        self._mark_tainted(node)
        if writer_id is not None and self._precedes(writer_id, node_id):
            for label_id in sorted(labels):
                confidence = self.taint_registry[label_id].confidence
                self._add_edge(writer_id, node_id, label_id, PERSIST_EDGE, confidence)
        logger.debug(f"Rehydrated {sorted(labels)} onto {node_id} from {record_key!r}")
        return labels

    def _precedes(self, u: str, v: str) -> bool:
        a, b = self.node(u), self.node(v)
        return a.session_id != b.session_id or a.event_index < b.event_index

    # -- queries ---------------------------------------------------------

    def _distances_to(self, target: str, label_id: str, origin: str) -> Dict[str, int]:
        """Reverse BFS over label-keyed edges, stopping at the origin's level."""
        dist = {target: 0}
        frontier = [target]
        while frontier and origin not in dist:
            next_frontier = []
            for x in frontier:
                for u, keydict in self.graph.pred[x].items():
                    if label_id in keydict and u not in dist:
                        dist[u] = dist[x] + 1
                        next_frontier.append(u)
            frontier = next_frontier
        return dist

    def witness_path(self, label_id: str, target: str) -> Optional[List[str]]:
        """
        Shortest label-carrying path from the label's origin to target.

        Among equally short paths the one visiting the earliest nodes wins.
        """
        origin = self.origin_node(label_id)
        if origin == target:
            return [origin]
        dist = self._distances_to(target, label_id, origin)
        if origin not in dist:
            return None
        path = [origin]
        current = origin
        while current != target:
            remaining = dist[current] - 1
            candidates = [
                v
                for v, keydict in self.graph.succ[current].items()
                if label_id in keydict and dist.get(v) == remaining
            ]
            current = min(candidates, key=self.order_key)
            path.append(current)
        return path

    def lineage_for_sink(self, sink_node_id: str) -> List[Tuple[TaintLabel, List[str]]]:
        """
        Every label with a directed path to the sink, each with one witness
        path, ordered by label origin.

        Raises:
            NotASink
        """
        node = self.node(sink_node_id)
        if EventKind.SINK not in node.kinds:
            raise NotASink(f"{sink_node_id} is not a sink")
        candidates = {
            key for keydict in self.graph.pred[sink_node_id].values() for key in keydict
        }
        lineage = []
        for label_id in candidates:
            path = self.witness_path(label_id, sink_node_id)
            if path is not None:
                lineage.append((self.taint_registry[label_id], path))
        lineage.sort(key=lambda item: self.order_key(item[1][0]))
        return lineage

    def crosses_memory(self, path: List[str]) -> bool:
        """True when a path passes through a persist edge."""
        for u, v in zip(path, path[1:]):
            keydict = self.graph.succ[u].get(v, {})
            if any(data["tier"] == PERSIST_EDGE for data in keydict.values()):
                return True
        return False

    def export(self) -> Dict[str, object]:
        """Plain-data view of the graph for the `graph` command."""
        return {
            "nodes": [n.to_record() for n in self.nodes()],
            "edges": [e.to_record() for e in self.edges()],
            "taint_registry": [l.to_record() for l in self.taint_registry.values()],
            "memory_annotations": {
                k: sorted(v) for k, v in sorted(self.memory_annotations.items())
            },
            "memory_writers": dict(sorted(self.memory_writers.items())),
        }


def enrich_event(event: ToolEvent, graph: DcpgGraph) -> ToolEvent:
    """
    The event as an instrumented producer would have logged it: source
    results carry their label's canary, memory writes carry `_nt_taint`.
    """
    node = graph.node(node_id_for(event.session_id, event.index))
    args = dict(event.args)
    result = event.result
    if EventKind.MEMORY_WRITE in node.kinds:
        args[TAINT_METADATA_KEY] = json.dumps(sorted(node.taint_set))
    label = graph.taint_registry.get(label_id_for(event.session_id, event.index))
    if label is not None and EventKind.SOURCE in node.kinds:
        result = label.fragment
    return ToolEvent(
        session_id=event.session_id,
        index=event.index,
        tool_name=event.tool_name,
        args=args,
        result=result,
        timestamp=event.timestamp,
    )
