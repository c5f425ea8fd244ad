"""
Audit Engine Package

This package orchestrates end-to-end audits:
- AuditEngine / Finding / AuditReport: graph replay, explicit cascade, causal fallback
- evaluation: scenario manifests, majority voting, precision/recall/F1, sweeps
- report: JSON and Markdown rendering
- suite: seeded synthetic scenario pack
- cli: command-line entry point
"""

from .engine import AuditEngine, AuditReport, Finding, FlowClass, run_audit
from .evaluation import (
    EvalReport,
    EvalSummary,
    ManifestError,
    RunSpec,
    ScenarioOutcome,
    ScenarioRecord,
    audit_run,
    audit_scenario,
    evaluate,
    family_breakdown,
    load_manifest,
    majority_detected,
    parse_manifest,
    run_evaluation,
    summarize,
    sweep,
)
from .report import (
    format_metric,
    render_audit_json,
    render_audit_markdown,
    render_eval_json,
    render_eval_markdown,
)
from .suite import FAMILIES, NEGATIVE_FAMILIES, POSITIVE_FAMILIES, family_histogram, generate_mini_suite

__all__ = [
    "FAMILIES",
    "NEGATIVE_FAMILIES",
    "POSITIVE_FAMILIES",
    "AuditEngine",
    "AuditReport",
    "EvalReport",
    "EvalSummary",
    "Finding",
    "FlowClass",
    "ManifestError",
    "RunSpec",
    "ScenarioOutcome",
    "ScenarioRecord",
    "audit_run",
    "audit_scenario",
    "evaluate",
    "family_breakdown",
    "family_histogram",
    "format_metric",
    "generate_mini_suite",
    "load_manifest",
    "majority_detected",
    "parse_manifest",
    "render_audit_json",
    "render_audit_markdown",
    "render_eval_json",
    "render_eval_markdown",
    "run_audit",
    "run_evaluation",
    "summarize",
    "sweep",
]
