"""
JSON and Markdown rendering for audit and evaluation reports.
"""

import json
from typing import Any, Dict, List, Optional, Sequence

from .engine import AuditReport
from .evaluation import EvalReport, EvalSummary

UNDEFINED = "--"


def format_metric(value: Optional[float]) -> str:
    return UNDEFINED if value is None else f"{value:.3f}"


def _dumps(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_audit_json(reports: Sequence[AuditReport], include_timing: bool = True) -> str:
    """One report object for a single trace, a list for several."""
    records = [r.to_record(include_timing) for r in reports]
    return _dumps(records[0] if len(records) == 1 else records)


def render_audit_markdown(reports: Sequence[AuditReport], include_timing: bool = True) -> str:
    lines: List[str] = []
    for report in reports:
        record = report.to_record(include_timing)
        lines.append(f"# Audit: {record['trace'] or 'trace'}")
        lines.append("")
        stats = record["stats"]
        lines.append(", ".join(f"{k}: {stats[k]}" for k in sorted(stats)))
        lines.append("")
        if record["findings"]:
            lines.append("| Sink | Source label | Flow | Confidence | Path |")
            lines.append("|---|---|---|---|---|")
            for finding in record["findings"]:
                sink = finding["sink"]
                flow = finding["flow_class"] + (" (degraded)" if finding["degraded"] else "")
                lines.append(
                    f"| {sink['session_id']}#{sink['index']} {sink['tool_name']} "
                    f"| {finding['source_label']} | {flow} | {finding['confidence']:.3f} "
                    f"| {' -> '.join(finding['provenance_path'])} |"
                )
        else:
            lines.append("No findings.")
        if record["degraded"]:
            lines.append("")
            lines.append("Degraded:")
            for entry in record["degraded"]:
                lines.append(f"- {entry['stage']} {entry['source_label']}: {entry['reason']}")
        lines.append("")
    return "\n".join(lines)


def summary_record(summary: EvalSummary) -> Dict[str, Any]:
    return {
        "tp": summary.tp,
        "fp": summary.fp,
        "fn": summary.fn,
        "tn": summary.tn,
        "precision": format_metric(summary.precision),
        "recall": format_metric(summary.recall),
        "f1": format_metric(summary.f1),
    }


def eval_record(report: EvalReport) -> Dict[str, Any]:
    return {
        "summary": summary_record(report.summary),
        "families": {name: summary_record(s) for name, s in sorted(report.families.items())},
        "scenarios": [o.to_record() for o in report.outcomes],
        "findings": report.total_findings,
    }


def render_eval_json(report: EvalReport) -> str:
    return _dumps(eval_record(report))


def _summary_row(name: str, summary: EvalSummary) -> str:
    return (
        f"| {name} | {summary.tp} | {summary.fp} | {summary.fn} | {summary.tn} "
        f"| {format_metric(summary.precision)} | {format_metric(summary.recall)} "
        f"| {format_metric(summary.f1)} |"
    )


def render_eval_markdown(report: EvalReport) -> str:
    lines = [
        "| Family | TP | FP | FN | TN | P | R | F1 |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for name, summary in sorted(report.families.items()):
        lines.append(_summary_row(name, summary))
    lines.append(_summary_row("**Overall**", report.summary))
    lines.append("")
    return "\n".join(lines)


def render_sweep_json(results: Sequence[tuple]) -> str:
    return _dumps(
        [
            {"theta_sem": theta, "summary": summary_record(r.summary), "findings": r.total_findings}
            for theta, r in results
        ]
    )


def render_sweep_markdown(results: Sequence[tuple]) -> str:
    lines = ["| theta_sem | Findings | P | R | F1 |", "|---|---|---|---|---|"]
    for theta, r in results:
        lines.append(
            f"| {theta:.2f} | {r.total_findings} | {format_metric(r.summary.precision)} "
            f"| {format_metric(r.summary.recall)} | {format_metric(r.summary.f1)} |"
        )
    lines.append("")
    return "\n".join(lines)
