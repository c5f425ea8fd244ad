"""
Simple configuration loader for audit settings
"""

import json
import os
from pathlib import Path
from typing import Dict, Any, Optional

from dotenv import load_dotenv

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / "config" / "audit_config.json"


def load_audit_config(config_path: Optional[Path] = None) -> Dict[str, Any]:
    """Load audit configuration from config file"""
    config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    with open(config_path, "r") as f:
        return json.load(f)


def get_embedding_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get configuration for the embedding provider"""
    config = config if config is not None else load_audit_config()
    section = config.get("embedding", {})
    return {
        "provider": section.get("provider", "local"),
        "endpoint": os.getenv("TRACETAINT_EMBEDDINGS_URL", section.get("endpoint")),
        "timeout_ms": section.get("timeout_ms", 10000),
        "max_in_flight": section.get("max_in_flight", 8),
        "dimension": section.get("dimension", 256),
    }


def get_judge_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get configuration for the counterfactual judge"""
    config = config if config is not None else load_audit_config()
    section = config.get("judge", {})
    return {
        "endpoint": os.getenv("TRACETAINT_JUDGE_URL", section.get("endpoint")),
        "timeout_ms": section.get("timeout_ms", 30000),
        "max_in_flight": section.get("max_in_flight", 4),
        "retries": section.get("retries", 1),
    }


def get_audit_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get configuration for the audit engine"""
    config = config if config is not None else load_audit_config()
    section = config.get("audit", {})
    return {
        "canary_seed": section.get("canary_seed", 0),
        "include_timing": section.get("include_timing", True),
        "label_concurrency": section.get("label_concurrency", 8),
    }


def get_suite_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get configuration for the synthetic scenario generator"""
    config = config if config is not None else load_audit_config()
    section = config.get("suite", {})
    return {
        "runs_per_scenario": section.get("runs_per_scenario", 5),
        "scenarios_per_family": section.get("scenarios_per_family", 5),
    }
