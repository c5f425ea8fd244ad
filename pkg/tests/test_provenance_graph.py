"""Tests for the provenance graph: construction, memory, lineage and snapshots."""

import json
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.provenance_graph import (
    CONTEXT_EDGE,
    PERSIST_EDGE,
    TAINT_METADATA_KEY,
    CorruptSnapshot,
    DcpgGraph,
    NotAMemoryRead,
    NotAMemoryWrite,
    NotASink,
    OutOfOrderEvent,
    VersionMismatch,
    enrich_event,
    load_state,
    load_state_file,
    memory_record_key,
    save_state,
    save_state_file,
)
from src.trace_model import EventKind, ToolEvent

SOURCE = {EventKind.SOURCE}
SINK = {EventKind.SINK}
OTHER = {EventKind.OTHER}
WRITE = {EventKind.MEMORY_WRITE}
READ = {EventKind.MEMORY_READ}


def _ev(session, index, tool="tool", result="", **args):
    return ToolEvent(session, index, tool, args, result)


def _store_then_save(key="note:q4"):
    graph = DcpgGraph()
    graph.record_event(_ev("A", 0, "web_search", "quarterly figures"), SOURCE)
    writer = graph.record_event(_ev("A", 1, "store_in_memory", value="figures"), WRITE)
    graph.annotate_memory_write(writer, key)
    return graph


class TestRecordEvent:
    def test_first_source_has_fresh_label_and_no_edges(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0, "web_search", "page"), SOURCE)
        node = graph.node(node_id)
        assert node.taint_set == {"s:0"}
        assert graph.graph.in_degree(node_id) == 0
        label = graph.taint_registry["s:0"]
        assert (label.source_session, label.source_index, label.confidence) == ("s", 0, 1.0)
        assert label.fragment == "page"

    def test_context_edges_from_every_tainted_predecessor(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        graph.record_event(_ev("s", 1), SOURCE)
        node_id = graph.record_event(_ev("s", 2), OTHER)
        incoming = {(u, key) for u, _, key in graph.graph.in_edges(node_id, keys=True)}
        assert incoming == {("s/0", "s:0"), ("s/1", "s:1")}
        assert graph.node(node_id).taint_set == {"s:0", "s:1"}

    def test_source_node_keeps_only_its_own_label(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        node_id = graph.record_event(_ev("s", 1), SOURCE)
        assert graph.node(node_id).taint_set == {"s:1"}

    def test_untainted_prefix_gives_no_edges(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), OTHER)
        node_id = graph.record_event(_ev("s", 1), SINK)
        assert graph.graph.in_degree(node_id) == 0
        assert graph.lineage_for_sink(node_id) == []

    def test_sessions_do_not_share_context(self):
        graph = DcpgGraph()
        graph.record_event(_ev("a", 0), SOURCE)
        node_id = graph.record_event(_ev("b", 0), SINK)
        assert graph.lineage_for_sink(node_id) == []

    def test_out_of_order(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), OTHER)
        with pytest.raises(OutOfOrderEvent) as err:
            graph.record_event(_ev("s", 2), OTHER)
        assert (err.value.expected, err.value.found) == (1, 2)

    def test_tainted_memory_write(self):
        graph = _store_then_save()
        assert graph.node("A/1").taint_set == {"A:0"}


class TestMemory:
    def test_annotation_records_labels(self):
        graph = _store_then_save()
        assert graph.memory_annotations["note:q4"] == {"A:0"}

    def test_untainted_write(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0, "store_in_memory"), WRITE)
        assert graph.annotate_memory_write(node_id, "k") == frozenset()
        assert graph.memory_annotations["k"] == frozenset()

    def test_second_write_replaces(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        first = graph.record_event(_ev("s", 1), WRITE)
        graph.annotate_memory_write(first, "k")
        clean = graph.record_event(_ev("t", 0), WRITE)
        graph.annotate_memory_write(clean, "k")
        assert graph.memory_annotations["k"] == frozenset()
        assert graph.memory_writers["k"] == "t/0"

    def test_annotate_requires_write(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0), OTHER)
        with pytest.raises(NotAMemoryWrite):
            graph.annotate_memory_write(node_id, "k")

    def test_rehydrate_requires_read(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0), OTHER)
        with pytest.raises(NotAMemoryRead):
            graph.rehydrate_on_read(node_id, "k")

    def test_read_of_unknown_key(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0), READ)
        assert graph.rehydrate_on_read(node_id, "never") == frozenset()
        assert graph.node(node_id).taint_set == set()

    def test_read_restores_label_with_persist_edge(self):
        graph = _store_then_save()
        reader = graph.record_event(_ev("B", 0, "load_memory"), READ)
        assert graph.rehydrate_on_read(reader, "note:q4") == {"A:0"}
        assert graph.node(reader).taint_set == {"A:0"}
        assert graph.graph.edges["A/1", reader, "A:0"]["tier"] == PERSIST_EDGE

    def test_cross_session_after_snapshot(self):
        graph = load_state(save_state(_store_then_save()))
        reader = graph.record_event(_ev("B", 0, "load_memory"), READ)
        restored = graph.rehydrate_on_read(reader, "note:q4")
        assert restored == {"A:0"}
        assert graph.taint_registry["A:0"].source_session == "A"
        sink = graph.record_event(_ev("B", 1, "write_report", content="figures"), SINK)
        ((label, path),) = graph.lineage_for_sink(sink)
        assert label.id == "A:0"
        assert path == ["A/0", "A/1", "B/0", "B/1"]
        assert graph.crosses_memory(path)

    def test_record_key_derivation(self):
        explicit = _ev("s", 0, "store_in_memory", record_key="note:1", value="x")
        assert memory_record_key(explicit, EventKind.MEMORY_WRITE) == "note:1"
        write = _ev("s", 0, "store_in_memory", value="same text")
        read = _ev("t", 0, "load_memory", "same text", query="anything")
        assert memory_record_key(write, EventKind.MEMORY_WRITE) == memory_record_key(
            read, EventKind.MEMORY_READ
        )
        tagged = _ev("s", 0, "store_in_memory", value="same text", **{TAINT_METADATA_KEY: "[]"})
        assert memory_record_key(tagged, EventKind.MEMORY_WRITE) == memory_record_key(
            write, EventKind.MEMORY_WRITE
        )


class TestLineage:
    def test_single_source_two_node_path(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        sink = graph.record_event(_ev("s", 1), SINK)
        ((label, path),) = graph.lineage_for_sink(sink)
        assert label.id == "s:0"
        assert path == ["s/0", "s/1"]
        assert not graph.crosses_memory(path)

    def test_shortest_path_preferred(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        graph.record_event(_ev("s", 1), OTHER)
        graph.record_event(_ev("s", 2), OTHER)
        sink = graph.record_event(_ev("s", 3), SINK)
        ((_, path),) = graph.lineage_for_sink(sink)
        assert path == ["s/0", "s/3"]

    def test_not_a_sink(self):
        graph = DcpgGraph()
        node_id = graph.record_event(_ev("s", 0), SOURCE)
        with pytest.raises(NotASink):
            graph.lineage_for_sink(node_id)

    def test_labels_ordered_by_origin(self):
        graph = DcpgGraph()
        graph.record_event(_ev("s", 0), SOURCE)
        graph.record_event(_ev("s", 1), SOURCE)
        sink = graph.record_event(_ev("s", 2), SINK)
        assert [label.id for label, _ in graph.lineage_for_sink(sink)] == ["s:0", "s:1"]


class TestSnapshot:
    def test_empty_graph(self):
        document = json.loads(save_state(DcpgGraph()))
        assert document["version"] == 1
        assert document["nodes"] == [] and document["edges"] == []
        assert document["taint_registry"] == [] and document["memory_annotations"] == {}

    def test_contains_memory_write(self):
        document = json.loads(save_state(_store_then_save()))
        assert any(n["tool_name"] == "store_in_memory" for n in document["nodes"])
        assert document["memory_annotations"] == {"note:q4": ["A:0"]}

    def test_file_round_trip(self, tmp_path):
        graph = _store_then_save()
        path = tmp_path / "state.json"
        save_state_file(graph, path)
        assert save_state(load_state_file(path)) == save_state(graph)

    def test_version_mismatch(self):
        document = json.loads(save_state(_store_then_save()))
        document["version"] = 99
        with pytest.raises(VersionMismatch):
            load_state(json.dumps(document))

    def test_dangling_label(self):
        document = json.loads(save_state(_store_then_save()))
        document["taint_registry"] = []
        with pytest.raises(CorruptSnapshot):
            load_state(json.dumps(document))

    def test_dangling_edge(self):
        document = json.loads(save_state(_store_then_save()))
        document["edges"].append(
            {"from_node": "A/0", "to_node": "Z/9", "label_id": "A:0", "tier": CONTEXT_EDGE, "confidence": 1.0}
        )
        with pytest.raises(CorruptSnapshot):
            load_state(json.dumps(document))

    def test_not_json(self):
        with pytest.raises(CorruptSnapshot):
            load_state(b"{not json")

    @pytest.mark.parametrize("field", ["memory_annotations", "memory_writers"])
    @pytest.mark.parametrize("value", [[], "x", 5])
    def test_memory_sections_must_be_objects(self, field, value):
        document = {"version": 1, "nodes": [], "edges": [], "taint_registry": [], "memory_annotations": {}}
        document[field] = value
        with pytest.raises(CorruptSnapshot):
            load_state(json.dumps(document))

    @pytest.mark.parametrize(
        ("field", "value"),
        [
            ("nodes", ["A/0"]),
            ("taint_registry", [["A:0"]]),
            ("edges", 7),
            ("memory_annotations", {"note:q4": "A:0"}),
        ],
    )
    def test_wrongly_shaped_records(self, field, value):
        document = json.loads(save_state(_store_then_save()))
        document[field] = value
        with pytest.raises(CorruptSnapshot):
            load_state(json.dumps(document))

    def test_appends_after_restore(self):
        graph = load_state(save_state(_store_then_save()))
        node_id = graph.record_event(_ev("A", 2, "web_search"), SOURCE)
        assert node_id == "A/2"
        with pytest.raises(OutOfOrderEvent):
            graph.record_event(_ev("A", 1), OTHER)


def test_enrich_event_adds_taint_metadata():
    graph = DcpgGraph()
    source = _ev("s", 0, "web_search", "page")
    graph.record_event(source, SOURCE, canary="NT-0000-0001", fragment="page NT-0000-0001")
    write = _ev("s", 1, "store_in_memory", value="page")
    graph.record_event(write, WRITE)
    assert json.loads(enrich_event(write, graph).args[TAINT_METADATA_KEY]) == ["s:0"]
    assert enrich_event(source, graph).result == "page NT-0000-0001"


# -- randomized oracle checks ------------------------------------------------

_KINDS = [SOURCE, SINK, OTHER, WRITE, READ, {EventKind.SOURCE, EventKind.MEMORY_READ}]

_steps = st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=2),
        st.sampled_from(range(len(_KINDS))),
        st.sampled_from(["k0", "k1", "k2"]),
    ),
    min_size=1,
    max_size=50,
)


def _build(steps):
    graph = DcpgGraph()
    counters = {}
    sinks = []
    for session_no, kind_no, key in steps:
        session = f"s{session_no}"
        index = counters.get(session, 0)
        counters[session] = index + 1
        kinds = _KINDS[kind_no]
        node_id = graph.record_event(_ev(session, index, "tool", f"r{index}"), kinds)
        if EventKind.MEMORY_WRITE in kinds:
            graph.annotate_memory_write(node_id, key)
        if EventKind.MEMORY_READ in kinds:
            graph.rehydrate_on_read(node_id, key)
        if EventKind.SINK in kinds:
            sinks.append(node_id)
    return graph, sinks


def _reachable_labels(graph, target):
    """Brute force: a label reaches target iff a path of edges keyed by it does."""
    edges = {}
    for u, v, key in graph.graph.edges(keys=True):
        edges.setdefault(key, {}).setdefault(u, set()).add(v)
    labels = set()
    for label_id in graph.taint_registry:
        origin = graph.origin_node(label_id)
        adjacency = edges.get(label_id, {})
        seen = {origin}
        queue = deque([origin])
        while queue:
            for nxt in adjacency.get(queue.popleft(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if target in seen and target != origin:
            labels.add(label_id)
    return labels


@settings(max_examples=100, deadline=None)
@given(_steps)
def test_lineage_matches_brute_force_closure(steps):
    graph, sinks = _build(steps)
    for sink in sinks:
        lineage = graph.lineage_for_sink(sink)
        assert {label.id for label, _ in lineage} == _reachable_labels(graph, sink)
        for label, path in lineage:
            assert path[0] == graph.origin_node(label.id)
            assert path[-1] == sink
            for u, v in zip(path, path[1:]):
                assert graph.graph.has_edge(u, v, key=label.id)


@settings(max_examples=100, deadline=None)
@given(_steps)
def test_edges_never_point_backwards(steps):
    graph, _ = _build(steps)
    for edge in graph.edges():
        a, b = graph.node(edge.from_node), graph.node(edge.to_node)
        if a.session_id == b.session_id:
            assert a.event_index < b.event_index


@settings(max_examples=100, deadline=None)
@given(_steps)
def test_snapshot_round_trip_is_byte_identical(steps):
    graph, sinks = _build(steps)
    first = save_state(graph)
    restored = load_state(first)
    assert save_state(restored) == first
    for sink in sinks:
        assert [(l.id, p) for l, p in restored.lineage_for_sink(sink)] == [
            (l.id, p) for l, p in graph.lineage_for_sink(sink)
        ]
