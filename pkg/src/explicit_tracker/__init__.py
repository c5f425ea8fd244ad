"""
Explicit Tracker Package

This package decides whether source content reached a sink's arguments:
- canary: NT- token minting, adoption and stripping
- tiers: canary match, character LCS, full-document cosine, chunk coverage
- cascade: ordered tier evaluation over sink argument variants
"""

from .canary import (
    CANARY_PATTERN,
    CanaryMinter,
    find_canary,
    format_canary,
    inject_canary,
    strip_canaries,
)
from .cascade import run_cascade, semantic_threshold, sink_variants
from .tiers import (
    MIN_LCS_LENGTH,
    Tier,
    TierResult,
    chunk_text,
    lcs_length,
    no_match,
    normalize_text,
    split_sentences,
    tier1_canary,
    tier2_lcs,
    tier3_semantic,
    tier4_coverage,
)

__all__ = [
    "CANARY_PATTERN",
    "CanaryMinter",
    "MIN_LCS_LENGTH",
    "Tier",
    "TierResult",
    "chunk_text",
    "find_canary",
    "format_canary",
    "inject_canary",
    "lcs_length",
    "no_match",
    "normalize_text",
    "run_cascade",
    "semantic_threshold",
    "sink_variants",
    "split_sentences",
    "strip_canaries",
    "tier1_canary",
    "tier2_lcs",
    "tier3_semantic",
    "tier4_coverage",
]
