"""
Command-line interface: audit, eval, sweep, graph and gen-suite.
"""

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv

from ..causal_analyzer import make_judge
from ..config import (
    get_audit_config,
    get_embedding_config,
    get_judge_config,
    get_suite_config,
    load_audit_config,
)
from ..embedding_provider import make_provider
from ..provenance_graph import enrich_event, load_state_file, save_state_file
from ..trace_model import find_trace_files, load_policy_file, load_trace_file, serialize_trace
from .engine import AuditEngine, AuditReport
from .evaluation import load_manifest, run_evaluation, sweep
from .report import (
    render_audit_json,
    render_audit_markdown,
    render_eval_json,
    render_eval_markdown,
    render_sweep_json,
    render_sweep_markdown,
)
from .suite import generate_mini_suite

logger = logging.getLogger(__name__)

EXIT_CLEAN = 0
EXIT_ERROR = 1
EXIT_FINDINGS = 3

DEFAULT_SWEEP = "0.50,0.55,0.60,0.65,0.70"


def setup_logging():
    """Log to stderr, and to LOG_FILE when set."""
    load_dotenv()
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv("LOG_FILE")
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def _add_provider_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--policy", help="Policy YAML (default: config/default_policy.yaml)")
    parser.add_argument("--judge", help="script:<file>, remote, or judge URL")
    parser.add_argument("--embeddings", help="local, remote, or embedding service URL")
    parser.add_argument("--report", choices=("json", "md"), default="json")
    parser.add_argument("--out", help="Write the report here instead of stdout")
    parser.add_argument("--config", help="Audit settings JSON (default: config/audit_config.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracetaint",
        description="Offline taint auditing for LLM agent tool-call traces",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    audit = commands.add_parser("audit", help="Audit a trace file or directory")
    audit.add_argument("--trace", required=True, help="Trace file, or directory of *.jsonl")
    audit.add_argument("--state-in", help="Snapshot to resume from")
    audit.add_argument("--state-out", help="Snapshot to write after the audit")
    audit.add_argument("--enriched-out", help="Write the trace with canaries and _nt_taint metadata")
    _add_provider_flags(audit)

    evaluate = commands.add_parser("eval", help="Evaluate a scenario manifest")
    evaluate.add_argument("--scenarios", required=True, help="Scenario manifest JSON")
    evaluate.add_argument(
        "--strict-attribution",
        action="store_true",
        help="Count a run only when the ground-truth source label is reported",
    )
    _add_provider_flags(evaluate)

    sweep_cmd = commands.add_parser("sweep", help="Evaluate over several semantic thresholds")
    sweep_cmd.add_argument("--scenarios", required=True, help="Scenario manifest JSON")
    sweep_cmd.add_argument("--thetas", default=DEFAULT_SWEEP, help="Comma-separated theta_sem values")
    sweep_cmd.add_argument("--strict-attribution", action="store_true")
    _add_provider_flags(sweep_cmd)

    graph = commands.add_parser("graph", help="Export the provenance graph of a trace")
    graph.add_argument("--trace", required=True)
    graph.add_argument("--export", required=True, help="Output JSON path")
    graph.add_argument("--policy")
    graph.add_argument("--state-in")
    graph.add_argument("--config")

    gen = commands.add_parser("gen-suite", help="Generate the synthetic scenario pack")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--scenarios-per-family", type=int)
    gen.add_argument("--runs", type=int)
    gen.add_argument("--config")
    return parser


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(text)


async def _close(*resources):
    for resource in resources:
        close = getattr(resource, "close", None)
        if close is not None:
            await close()


def _build_engine(args, config) -> AuditEngine:
    audit_config = get_audit_config(config)
    return AuditEngine(
        policy=load_policy_file(args.policy),
        provider=make_provider(args.embeddings, get_embedding_config(config)),
        judge=make_judge(getattr(args, "judge", None), get_judge_config(config)),
        canary_seed=audit_config["canary_seed"],
        label_concurrency=audit_config["label_concurrency"],
        judge_retries=get_judge_config(config)["retries"],
    )


async def _audit(args, config) -> int:
    engine = _build_engine(args, config)
    include_timing = get_audit_config(config)["include_timing"]
    graph = load_state_file(args.state_in) if args.state_in else None
    reports: List[AuditReport] = []
    try:
        for trace_path in find_trace_files(args.trace):
            report = await engine.audit_trace(
                load_trace_file(trace_path), graph=graph, trace_name=str(trace_path)
            )
            graph = report.graph
            reports.append(report)
    finally:
        await _close(engine.provider, engine.judge)

    if args.state_out and graph is not None:
        save_state_file(graph, args.state_out)
        logger.info(f"State snapshot written to {args.state_out}")
    if args.enriched_out and graph is not None:
        events = [enrich_event(e, graph) for r in reports for e in r.events]
        Path(args.enriched_out).write_bytes(serialize_trace(events))

    render = render_audit_markdown if args.report == "md" else render_audit_json
    _emit(render(reports, include_timing), args.out)
    return EXIT_FINDINGS if any(r.findings for r in reports) else EXIT_CLEAN


async def _eval(args, config) -> int:
    engine = _build_engine(args, config)
    try:
        report = await run_evaluation(load_manifest(args.scenarios), engine, args.strict_attribution)
    finally:
        await _close(engine.provider, engine.judge)
    render = render_eval_markdown if args.report == "md" else render_eval_json
    _emit(render(report), args.out)
    return EXIT_CLEAN


async def _sweep(args, config) -> int:
    thetas = [float(v) for v in args.thetas.split(",") if v.strip()]
    engine = _build_engine(args, config)
    try:
        results = await sweep(load_manifest(args.scenarios), engine, thetas, args.strict_attribution)
    finally:
        await _close(engine.provider, engine.judge)
    render = render_sweep_markdown if args.report == "md" else render_sweep_json
    _emit(render(results), args.out)
    return EXIT_CLEAN


async def _graph(args, config) -> int:
    engine = AuditEngine(
        policy=load_policy_file(args.policy),
        provider=make_provider("local", get_embedding_config(config)),
        canary_seed=get_audit_config(config)["canary_seed"],
    )
    graph = load_state_file(args.state_in) if args.state_in else None
    report = await engine.audit_trace(load_trace_file(args.trace), graph=graph)
    document = report.graph.export()
    Path(args.export).write_text(
        json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    logger.info(f"Graph exported to {args.export}")
    return EXIT_CLEAN


def _gen_suite(args, config) -> int:
    suite_config = get_suite_config(config)
    manifest = generate_mini_suite(
        args.seed,
        args.out,
        scenarios_per_family=args.scenarios_per_family or suite_config["scenarios_per_family"],
        runs_per_scenario=args.runs or suite_config["runs_per_scenario"],
    )
    logger.info(f"Manifest: {manifest}")
    return EXIT_CLEAN


_ASYNC_COMMANDS = {"audit": _audit, "eval": _eval, "sweep": _sweep, "graph": _graph}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        config = load_audit_config(args.config)
        if args.command == "gen-suite":
            return _gen_suite(args, config)
        return asyncio.run(_ASYNC_COMMANDS[args.command](args, config))
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_ERROR
