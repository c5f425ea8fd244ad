"""
Cascade driver: tiers run in order and the first tier that fires wins.
"""

import logging
from typing import Dict, List, Sequence, Union

from ..embedding_provider import EmbeddingError
from ..trace_model import TaintLabel, ThresholdProfile
from .tiers import (
    TierResult,
    no_match,
    tier1_canary,
    tier2_lcs,
    tier3_semantic,
    tier4_coverage,
)

logger = logging.getLogger(__name__)


def sink_variants(args: Dict[str, str], skip_keys: Sequence[str] = ()) -> List[str]:
    """
    Texts a sink's arguments are tested as: all values newline-joined, then
    each value on its own when there is more than one.
    """
    values = [v for k, v in args.items() if k not in skip_keys and v]
    if not values:
        return []
    variants = ["\n".join(values)]
    if len(values) > 1:
        for value in values:
            if value not in variants:
                variants.append(value)
    return variants


def semantic_threshold(
    profile: ThresholdProfile, is_rag_lineage: bool, is_trusted_source: bool
) -> float:
    """Stricter of the applicable semantic thresholds."""
    threshold = profile.theta_sem
    if is_rag_lineage:
        threshold = max(threshold, profile.theta_sem_rag)
    if is_trusted_source:
        threshold = max(threshold, profile.theta_safe)
    return threshold


def _best(results: List[TierResult]) -> Union[TierResult, None]:
    fired = [r for r in results if r.fired]
    if not fired:
        return None
    return max(fired, key=lambda r: r.score)


async def run_cascade(
    label: TaintLabel,
    source_text: str,
    sink_text: Union[str, Sequence[str]],
    provider,
    profile: ThresholdProfile,
    is_rag_lineage: bool = False,
    is_trusted_source: bool = False,
    chunk_sentences: int = 3,
) -> TierResult:
    """
    Decide whether a label's source content propagated into a sink.

    Each tier is tried against every sink variant before moving on, and the
    best-scoring variant of the first firing tier is returned. The embedding
    provider is not called once Tier 1 or Tier 2 fires. A provider failure
    skips Tiers 3 and 4 and marks the result degraded.
    """
    variants = [sink_text] if isinstance(sink_text, str) else list(sink_text)
    variants = [v for v in variants if v]
    if not variants:
        return no_match()

    for variant in variants:
        result = tier1_canary(label, variant)
        if result.fired:
            return result

    best = _best([tier2_lcs(source_text, v, profile.theta_str) for v in variants])
    if best is not None:
        return best

    theta = semantic_threshold(profile, is_rag_lineage, is_trusted_source)
    try:
        best = _best([await tier3_semantic(source_text, v, provider, theta) for v in variants])
        if best is not None:
            return best
        best = _best(
            [
                await tier4_coverage(
                    source_text, v, provider, theta, profile.theta_cov, chunk_sentences
                )
                for v in variants
            ]
        )
    except EmbeddingError as e:
        logger.warning(f"Embedding provider failed for label {label.id}, semantic tiers skipped: {e}")
        return no_match(degraded=True, notes=(f"semantic tiers skipped: {e}",))
    return best if best is not None else no_match()
