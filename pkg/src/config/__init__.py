"""
Configuration Package

This package provides configuration loading utilities:
- get_embedding_config: Configuration for the embedding provider
- get_judge_config: Configuration for the counterfactual judge
- get_audit_config: Configuration for the audit engine
- get_suite_config: Configuration for the synthetic scenario generator
- load_audit_config: Base configuration loader
"""

from .loader import (
    get_audit_config,
    get_embedding_config,
    get_judge_config,
    get_suite_config,
    load_audit_config,
)

__all__ = [
    "get_audit_config",
    "get_embedding_config",
    "get_judge_config",
    "get_suite_config",
    "load_audit_config",
]
