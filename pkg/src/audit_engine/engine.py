"""
Audit engine: replays a trace into the provenance graph and audits every
sink against its reconstructed lineage.
"""

import asyncio
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..causal_analyzer import (
    CausalError,
    Judge,
    JudgeVerdict,
    attribute,
    build_neutralized_context,
    probe_key_for,
    probe_sink,
    supporting_string_evidence,
)
from ..embedding_provider import CountingProvider, MemoizedProvider
from ..explicit_tracker import CanaryMinter, Tier, TierResult, find_canary, run_cascade, sink_variants
from ..provenance_graph import (
    RECORD_KEY_ARG,
    TAINT_METADATA_KEY,
    DcpgGraph,
    memory_record_key,
)
from ..trace_model import EventKind, Policy, TaintLabel, ToolEvent, classify_kinds

logger = logging.getLogger(__name__)


class FlowClass(str, Enum):
    EXPLICIT_CANARY = "ExplicitCanary"
    EXPLICIT_LCS = "ExplicitLcs"
    EXPLICIT_SEMANTIC = "ExplicitSemantic"
    EXPLICIT_COVERAGE = "ExplicitCoverage"
    IMPLICIT_CONTROL = "ImplicitControl"


_FLOW_FOR_TIER = {
    Tier.CANARY: FlowClass.EXPLICIT_CANARY,
    Tier.LCS: FlowClass.EXPLICIT_LCS,
    Tier.SEMANTIC: FlowClass.EXPLICIT_SEMANTIC,
    Tier.COVERAGE: FlowClass.EXPLICIT_COVERAGE,
}

STRING_SUPPORTED = "string_supported"
JUDGED = "judged"


@dataclass(frozen=True)
class Finding:
    sink_ref: Tuple[str, int, str]
    source_label: str
    flow_class: FlowClass
    confidence: float
    provenance_path: Tuple[str, ...]
    evidence: Dict[str, Any]
    degraded: bool = False
    evidence_grade: Optional[str] = None

    def to_record(self) -> Dict[str, Any]:
        session, index, tool = self.sink_ref
        record = {
            "sink": {"session_id": session, "index": index, "tool_name": tool},
            "source_label": self.source_label,
            "flow_class": self.flow_class.value,
            "confidence": round(self.confidence, 6),
            "provenance_path": list(self.provenance_path),
            "evidence": self.evidence,
            "degraded": self.degraded,
        }
        if self.evidence_grade is not None:
            record["evidence_grade"] = self.evidence_grade
        return record


@dataclass
class AuditReport:
    trace: str
    findings: List[Finding] = field(default_factory=list)
    degraded: List[Dict[str, Any]] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)
    graph: Optional[DcpgGraph] = None
    events: List[ToolEvent] = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return any(not f.degraded for f in self.findings)

    def to_record(self, include_timing: bool = True) -> Dict[str, Any]:
        stats = dict(self.stats)
        if not include_timing:
            stats.pop("wall_ms", None)
        return {
            "trace": self.trace,
            "findings": [f.to_record() for f in self.findings],
            "degraded": list(self.degraded),
            "stats": stats,
        }


@dataclass
class _SinkAudit:
    """Per-sink scratch state joined after the fan-out."""

    event: ToolEvent
    node_id: str
    lineage: List[Tuple[TaintLabel, List[str]]]
    variants: List[str]
    cascades: List[TierResult] = field(default_factory=list)


class AuditEngine:
    """
    Ordered analyzers over one provenance graph: the explicit cascade at
    every sink, then the counterfactual probe when nothing explicit fired.
    """

    def __init__(
        self,
        policy: Policy,
        provider,
        judge: Optional[Judge] = None,
        canary_seed: int = 0,
        label_concurrency: int = 8,
        judge_retries: int = 1,
    ):
        """
        Args:
            policy: source/sink catalogue and thresholds
            provider: embedding provider for Tiers 3 and 4
            judge: counterfactual judge; None disables the causal stage
            canary_seed: seed for minted canaries
            label_concurrency: bound on concurrent per-label work at a sink
            judge_retries: retries on a malformed verdict
        """
        self.policy = policy
        self.provider = provider
        self.judge = judge
        self.canary_seed = canary_seed
        self.label_concurrency = max(1, label_concurrency)
        self.judge_retries = judge_retries

    def _copy(self, **changes) -> "AuditEngine":
        settings = {
            "policy": self.policy,
            "provider": self.provider,
            "judge": self.judge,
            "canary_seed": self.canary_seed,
            "label_concurrency": self.label_concurrency,
            "judge_retries": self.judge_retries,
        }
        settings.update(changes)
        return AuditEngine(**settings)

    def with_judge(self, judge: Optional[Judge]) -> "AuditEngine":
        return self._copy(judge=judge)

    def with_policy(self, policy: Policy) -> "AuditEngine":
        return self._copy(policy=policy)

    def _source_fragment(self, event: ToolEvent, minter: CanaryMinter) -> Tuple[str, str]:
        adopted = find_canary(event.result)
        if adopted is not None:
            minter.reserve(adopted)
            return event.result, adopted
        fragment, token = minter.inject(event.result)
        return fragment, token

    async def audit_trace(
        self,
        events: Sequence[ToolEvent],
        graph: Optional[DcpgGraph] = None,
        trace_name: str = "",
    ) -> AuditReport:
        """
        Replay events in order and audit every sink.

        A graph restored from a snapshot may be passed in; new sessions
        append to it. At most one finding is emitted per (sink, label).
        """
        started = time.perf_counter()
        graph = graph if graph is not None else DcpgGraph()
        counting = CountingProvider(self.provider)
        provider = MemoizedProvider(counting)
        minter = CanaryMinter(
            self.canary_seed,
            reserved=(label.canary for label in graph.taint_registry.values() if label.canary),
        )
        report = AuditReport(trace=trace_name, graph=graph, events=list(events))
        history: Dict[str, List[ToolEvent]] = {}
        sinks = 0
        probes = 0

        for event in events:
            kinds = classify_kinds(event, self.policy)
            canary = fragment = None
            if EventKind.SOURCE in kinds:
                fragment, canary = self._source_fragment(event, minter)
            node_id = graph.record_event(event, kinds, canary=canary, fragment=fragment)

            if EventKind.MEMORY_WRITE in kinds:
                graph.annotate_memory_write(node_id, memory_record_key(event, EventKind.MEMORY_WRITE))
            if EventKind.MEMORY_READ in kinds:
                graph.rehydrate_on_read(node_id, memory_record_key(event, EventKind.MEMORY_READ))

            if EventKind.SINK in kinds:
                sinks += 1
                prefix = history.get(event.session_id, [])
                probes += await self._audit_sink(
                    graph, provider, report, event, node_id, prefix
                )
            history.setdefault(event.session_id, []).append(event)

        report.findings = self._ordered(report.findings, events)
        report.stats = {
            "events": len(events),
            "sinks": sinks,
            "labels": len(graph.taint_registry),
            "probes": probes,
            "provider_calls": counting.calls,
            "causal_stage": "enabled" if self.judge is not None else "disabled",
            "wall_ms": round((time.perf_counter() - started) * 1000, 3),
        }
        logger.info(
            f"Audited {trace_name or 'trace'}: {len(events)} events, {sinks} sinks, "
            f"{len(report.findings)} findings, {len(report.degraded)} degraded"
        )
        return report

    @staticmethod
    def _ordered(findings: List[Finding], events: Sequence[ToolEvent]) -> List[Finding]:
        position = {e.ref: i for i, e in enumerate(events)}
        return sorted(
            findings,
            key=lambda f: (position.get(f.sink_ref[:2], -1), -f.confidence, f.source_label),
        )

    async def _audit_sink(
        self,
        graph: DcpgGraph,
        provider,
        report: AuditReport,
        event: ToolEvent,
        node_id: str,
        prefix: List[ToolEvent],
    ) -> int:
        """Audit one sink; returns the number of judge probes issued."""
        lineage = graph.lineage_for_sink(node_id)
        if not lineage:
            return 0
        audit = _SinkAudit(
            event=event,
            node_id=node_id,
            lineage=lineage,
            variants=sink_variants(event.args, skip_keys=(TAINT_METADATA_KEY, RECORD_KEY_ARG)),
        )
        semaphore = asyncio.Semaphore(self.label_concurrency)

        async def cascade(label: TaintLabel, path: List[str]) -> TierResult:
            async with semaphore:
                return await run_cascade(
                    label,
                    label.fragment,
                    audit.variants,
                    provider,
                    self.policy.thresholds,
                    is_rag_lineage=graph.crosses_memory(path),
                    is_trusted_source=label.origin_tool in self.policy.trusted_sources,
                    chunk_sentences=self.policy.chunk_sentences,
                )

        audit.cascades = list(await asyncio.gather(*(cascade(l, p) for l, p in lineage)))
        sink_ref = (event.session_id, event.index, event.tool_name)

        cascade_degraded = False
        for (label, _), result in zip(lineage, audit.cascades):
            if result.degraded:
                cascade_degraded = True
                report.degraded.append(
                    {
                        "stage": "cascade",
                        "sink": list(sink_ref),
                        "source_label": label.id,
                        "reason": "; ".join(result.notes),
                    }
                )

        explicit = [
            Finding(
                sink_ref=sink_ref,
                source_label=label.id,
                flow_class=_FLOW_FOR_TIER[result.tier],
                confidence=min(1.0, result.score),
                provenance_path=tuple(path),
                evidence=result.to_record(),
            )
            for (label, path), result in zip(lineage, audit.cascades)
            if result.fired
        ]
        if explicit:
            report.findings.extend(explicit)
            return 0
        if self.judge is None:
            return 0
        return await self._probe(graph, report, audit, prefix, sink_ref, cascade_degraded)

    def _neutralization_target(self, graph: DcpgGraph, path: List[str], session_id: str) -> Tuple[str, int]:
        """First node of the witness path inside the sink's session."""
        for node_id in path:
            node = graph.node(node_id)
            if node.session_id == session_id:
                return (node.session_id, node.event_index)
        first = graph.node(path[0])
        return (first.session_id, first.event_index)

    async def _probe(
        self,
        graph: DcpgGraph,
        report: AuditReport,
        audit: _SinkAudit,
        prefix: List[ToolEvent],
        sink_ref: Tuple[str, int, str],
        cascade_degraded: bool,
    ) -> int:
        event = audit.event
        semaphore = asyncio.Semaphore(self.label_concurrency)

        async def probe(label: TaintLabel, path: List[str]) -> Optional[JudgeVerdict]:
            target = self._neutralization_target(graph, path, event.session_id)
            async with semaphore:
                try:
                    context = build_neutralized_context(prefix, target, self.policy)
                    return await probe_sink(
                        context,
                        event.tool_name,
                        {k: v for k, v in event.args.items() if k != TAINT_METADATA_KEY},
                        self.judge,
                        probe_key_for(event.tool_name, label.id),
                        retries=self.judge_retries,
                    )
                except CausalError as e:
                    logger.warning(f"Probe for {label.id} at {audit.node_id} failed: {e}")
                    report.degraded.append(
                        {
                            "stage": "causal",
                            "sink": list(sink_ref),
                            "source_label": label.id,
                            "reason": str(e),
                        }
                    )
                    return None

        results = await asyncio.gather(*(probe(l, p) for l, p in audit.lineage))
        verdicts = {label.id: v for (label, _), v in zip(audit.lineage, results) if v is not None}
        paths = {label.id: (label, path) for label, path in audit.lineage}

        for label_id, confidence in attribute([l.id for l, _ in audit.lineage], verdicts):
            label, path = paths[label_id]
            support = supporting_string_evidence(
                label.fragment, audit.variants, self.policy.thresholds.theta_str_impl
            )
            evidence = verdicts[label_id].to_record()
            if support is not None:
                evidence["string_evidence"] = round(support, 6)
            report.findings.append(
                Finding(
                    sink_ref=sink_ref,
                    source_label=label_id,
                    flow_class=FlowClass.IMPLICIT_CONTROL,
                    confidence=confidence,
                    provenance_path=tuple(path),
                    evidence=evidence,
                    degraded=cascade_degraded,
                    evidence_grade=STRING_SUPPORTED if support is not None else JUDGED,
                )
            )
        return len(audit.lineage)


def run_audit(engine: AuditEngine, events: Sequence[ToolEvent], **kwargs) -> AuditReport:
    """Synchronous wrapper around AuditEngine.audit_trace."""
    return asyncio.run(engine.audit_trace(events, **kwargs))
