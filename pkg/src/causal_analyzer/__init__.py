"""
Causal Analyzer Package

This package runs the sink-driven counterfactual probe:
- NeutralizedContext / build_neutralized_context: history with one source neutralized
- probe_sink / parse_verdict: two-context judge prompt and strict verdict parsing
- ScriptedJudge / HttpJudgeClient / make_judge: judge backends
- attribute: multi-source causal attribution
"""

from .attribution import attribute, supporting_string_evidence
from .context import (
    RETRIEVAL_PLACEHOLDER,
    CausalError,
    EventNotInPrefix,
    NeutralizedContext,
    build_neutralized_context,
    placeholder_for,
    render_event,
)
from .judge import (
    DEFAULT_SCRIPTED_VERDICT,
    PROBE_TEMPLATE,
    SYSTEM_PROMPT,
    HttpJudgeClient,
    Judge,
    JudgeError,
    JudgeUnavailable,
    JudgeVerdict,
    MalformedVerdict,
    ScriptedJudge,
    make_judge,
    parse_verdict,
    probe_key_for,
    probe_sink,
    render_probe,
)

__all__ = [
    "DEFAULT_SCRIPTED_VERDICT",
    "PROBE_TEMPLATE",
    "RETRIEVAL_PLACEHOLDER",
    "SYSTEM_PROMPT",
    "CausalError",
    "EventNotInPrefix",
    "HttpJudgeClient",
    "Judge",
    "JudgeError",
    "JudgeUnavailable",
    "JudgeVerdict",
    "MalformedVerdict",
    "NeutralizedContext",
    "ScriptedJudge",
    "attribute",
    "build_neutralized_context",
    "make_judge",
    "parse_verdict",
    "placeholder_for",
    "probe_key_for",
    "probe_sink",
    "render_event",
    "render_probe",
    "supporting_string_evidence",
]
