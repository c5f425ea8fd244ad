"""
Scenario-level evaluation: manifest loading, majority voting over repeated
runs, and precision/recall/F1.
"""

import asyncio
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..causal_analyzer import ScriptedJudge
from ..provenance_graph import load_state, load_state_file, save_state
from ..trace_model import load_trace_file
from .engine import AuditEngine

logger = logging.getLogger(__name__)


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class RunSpec:
    """One run: trace files chained through state snapshots."""

    traces: Tuple[Path, ...]
    snapshot: Optional[Path] = None
    judge_script: Optional[Path] = None


@dataclass(frozen=True)
class ScenarioRecord:
    scenario_id: str
    family: str
    expected_positive: bool
    run_traces: Tuple[RunSpec, ...]
    judge_script: Optional[Path] = None
    source_label: Optional[str] = None

    def __post_init__(self):
        if not self.run_traces:
            raise ManifestError(f"Scenario {self.scenario_id!r} has no runs")


def _run_spec(entry: Any, base: Path, scenario_id: str) -> RunSpec:
    if isinstance(entry, str):
        return RunSpec((base / entry,))
    if isinstance(entry, list):
        return RunSpec(tuple(base / p for p in entry))
    if isinstance(entry, dict):
        traces = entry.get("traces")
        if isinstance(traces, str):
            traces = [traces]
        if not traces:
            raise ManifestError(f"Run of {scenario_id!r} lists no traces")
        snapshot = entry.get("snapshot")
        judge_script = entry.get("judge_script")
        return RunSpec(
            tuple(base / p for p in traces),
            snapshot=base / snapshot if snapshot else None,
            judge_script=base / judge_script if judge_script else None,
        )
    raise ManifestError(f"Unrecognized run entry in {scenario_id!r}: {entry!r}")


def parse_manifest(document: Any, base_dir: Union[str, Path] = ".") -> List[ScenarioRecord]:
    """
    Scenario records from a manifest document; paths resolve against base_dir.

    Raises:
        ManifestError
    """
    base = Path(base_dir)
    if not isinstance(document, list):
        raise ManifestError("Scenario manifest must be a JSON array")
    records = []
    for entry in document:
        try:
            scenario_id = str(entry["scenario_id"])
            runs = entry["run_traces"]
            if not isinstance(runs, list):
                raise ManifestError(f"run_traces of {scenario_id!r} must be a list")
            judge_script = entry.get("judge_script")
            snapshot = entry.get("snapshot")
            specs = []
            for run in runs:
                choice = _run_spec(run, base, scenario_id)
                if snapshot and choice.snapshot is None:
                    choice = RunSpec(choice.traces, base / snapshot, choice.judge_script)
                specs.append(choice)
            records.append(
                ScenarioRecord(
                    scenario_id=scenario_id,
                    family=str(entry["family"]),
                    expected_positive=bool(entry["expected_positive"]),
                    run_traces=tuple(specs),
                    judge_script=base / judge_script if judge_script else None,
                    source_label=entry.get("source_label"),
                )
            )
        except (KeyError, TypeError) as e:
            raise ManifestError(f"Malformed scenario entry: {e}")
    return records


def load_manifest(path: Union[str, Path]) -> List[ScenarioRecord]:
    manifest_path = Path(path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"Scenario manifest not found: {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise ManifestError(f"Manifest is not valid JSON: {e}")
    return parse_manifest(document, manifest_path.parent)


@dataclass(frozen=True)
class EvalSummary:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def precision(self) -> Optional[float]:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else None

    @property
    def recall(self) -> Optional[float]:
        actual = self.tp + self.fn
        return self.tp / actual if actual else None

    @property
    def f1(self) -> Optional[float]:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)


def summarize(tp: int, fp: int, fn: int, tn: int) -> EvalSummary:
    if min(tp, fp, fn, tn) < 0:
        raise ValueError("Confusion counts must be non-negative")
    return EvalSummary(tp, fp, fn, tn)


def majority_detected(run_positives: Sequence[bool]) -> bool:
    """Strict majority: 3 of 5, 1 of 1, 2 of 2."""
    return sum(1 for p in run_positives if p) >= len(run_positives) // 2 + 1


@dataclass
class ScenarioOutcome:
    record: ScenarioRecord
    run_positives: List[bool] = field(default_factory=list)
    findings: int = 0

    @property
    def detected(self) -> bool:
        return majority_detected(self.run_positives)

    def to_record(self) -> Dict[str, Any]:
        return {
            "scenario_id": self.record.scenario_id,
            "family": self.record.family,
            "expected_positive": self.record.expected_positive,
            "positive_runs": sum(self.run_positives),
            "runs": len(self.run_positives),
            "detected": self.detected,
        }


def evaluate(outcomes: Iterable[Tuple[bool, bool]]) -> EvalSummary:
    """Confusion counts over (expected_positive, detected) pairs."""
    tp = fp = fn = tn = 0
    for expected, detected in outcomes:
        if expected and detected:
            tp += 1
        elif detected:
            fp += 1
        elif expected:
            fn += 1
        else:
            tn += 1
    return summarize(tp, fp, fn, tn)


@dataclass
class EvalReport:
    summary: EvalSummary
    families: Dict[str, EvalSummary]
    outcomes: List[ScenarioOutcome]

    @property
    def total_findings(self) -> int:
        return sum(o.findings for o in self.outcomes)


async def audit_run(
    run: RunSpec, engine: AuditEngine, source_label: Optional[str] = None
) -> Tuple[bool, int]:
    """
    Audit one run's traces in order, handing the graph from one trace to
    the next through a state snapshot.

    Returns (positive, number of findings).
    """
    graph = load_state_file(run.snapshot) if run.snapshot else None
    positive = False
    findings = 0
    for position, trace_path in enumerate(run.traces):
        if position > 0:
            graph = load_state(save_state(graph))
        report = await engine.audit_trace(
            load_trace_file(trace_path), graph=graph, trace_name=trace_path.name
        )
        graph = report.graph
        findings += len(report.findings)
        for finding in report.findings:
            if finding.degraded:
                continue
            if source_label is None or finding.source_label == source_label:
                positive = True
    return positive, findings


async def audit_scenario(
    record: ScenarioRecord, engine: AuditEngine, strict_attribution: bool = False
) -> ScenarioOutcome:
    """
    Audit every run of a scenario; detected when a strict majority of runs
    carries a non-degraded finding (the ground-truth label's, when strict).
    """
    required = record.source_label if strict_attribution else None

    async def one_run(run: RunSpec) -> Tuple[bool, int]:
        script = run.judge_script or record.judge_script
        run_engine = engine.with_judge(ScriptedJudge.from_file(script)) if script else engine
        return await audit_run(run, run_engine, required)

    results = await asyncio.gather(*(one_run(run) for run in record.run_traces))
    outcome = ScenarioOutcome(
        record=record,
        run_positives=[positive for positive, _ in results],
        findings=sum(count for _, count in results),
    )
    logger.debug(
        f"Scenario {record.scenario_id}: {sum(outcome.run_positives)}/{len(results)} "
        f"positive runs, detected={outcome.detected}"
    )
    return outcome


def family_breakdown(outcomes: Sequence[ScenarioOutcome]) -> Dict[str, EvalSummary]:
    grouped: Dict[str, List[Tuple[bool, bool]]] = defaultdict(list)
    for outcome in outcomes:
        grouped[outcome.record.family].append(
            (outcome.record.expected_positive, outcome.detected)
        )
    return {family: evaluate(pairs) for family, pairs in grouped.items()}


async def run_evaluation(
    records: Sequence[ScenarioRecord], engine: AuditEngine, strict_attribution: bool = False
) -> EvalReport:
    outcomes = list(
        await asyncio.gather(*(audit_scenario(r, engine, strict_attribution) for r in records))
    )
    summary = evaluate((o.record.expected_positive, o.detected) for o in outcomes)
    logger.info(
        f"Evaluated {len(outcomes)} scenarios: tp={summary.tp} fp={summary.fp} "
        f"fn={summary.fn} tn={summary.tn}"
    )
    return EvalReport(summary, family_breakdown(outcomes), outcomes)


async def sweep(
    records: Sequence[ScenarioRecord],
    engine: AuditEngine,
    theta_values: Sequence[float],
    strict_attribution: bool = False,
) -> List[Tuple[float, EvalReport]]:
    """Re-run the evaluation once per semantic threshold value."""
    results = []
    for theta in theta_values:
        swept = engine.with_policy(engine.policy.with_thresholds(theta_sem=theta))
        results.append((theta, await run_evaluation(records, swept, strict_attribution)))
    return results
