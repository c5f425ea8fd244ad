"""
The four explicit-propagation tiers: canary, LCS, semantic, coverage.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..embedding_provider import cosine
from ..trace_model import TaintLabel
from .canary import strip_canaries

logger = logging.getLogger(__name__)

# sinks shorter than this never fire Tier 2
MIN_LCS_LENGTH = 8

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+|\n+")


class Tier(str, Enum):
    CANARY = "Canary"
    LCS = "Lcs"
    SEMANTIC = "Semantic"
    COVERAGE = "Coverage"
    NONE = "None"


@dataclass(frozen=True)
class TierResult:
    tier: Tier
    score: float
    matched_fragment: Optional[str] = None
    threshold_used: float = 0.0
    degraded: bool = False
    notes: Tuple[str, ...] = ()

    @property
    def fired(self) -> bool:
        return self.tier != Tier.NONE

    def to_record(self) -> Dict[str, object]:
        return {
            "kind": "tier",
            "tier": self.tier.value,
            "score": round(self.score, 6),
            "matched_fragment": self.matched_fragment,
            "threshold_used": self.threshold_used,
            "degraded": self.degraded,
            "notes": list(self.notes),
        }


def no_match(degraded: bool = False, notes: Tuple[str, ...] = ()) -> TierResult:
    return TierResult(Tier.NONE, 0.0, degraded=degraded, notes=notes)


def normalize_text(text: str) -> str:
    """Lowercase and collapse whitespace runs to single spaces."""
    return " ".join(text.lower().split())


def lcs_length(a: str, b: str) -> int:
    """
    Length of the longest common subsequence of two strings.

    Bit-parallel form of the standard DP table: bit i of `v` is clear
    where the table's column value steps up at position i of `a`.
    """
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    masks: Dict[str, int] = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for ch in b:
        u = v & masks.get(ch, 0)
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def split_sentences(text: str) -> List[str]:
    """Split on `.`/`!`/`?` followed by whitespace, or on newlines; normalized."""
    sentences = (normalize_text(piece) for piece in _SENTENCE_BREAK.split(text))
    return [s for s in sentences if s]


def chunk_text(text: str, chunk_sentences: int) -> List[str]:
    """Consecutive chunks of `chunk_sentences` sentences joined by spaces."""
    sentences = split_sentences(text)
    return [
        " ".join(sentences[i : i + chunk_sentences])
        for i in range(0, len(sentences), chunk_sentences)
    ]


def _excerpt(text: str, limit: int = 160) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


def tier1_canary(label: TaintLabel, sink_text: str) -> TierResult:
    if label.canary and label.canary in sink_text:
        return TierResult(Tier.CANARY, 1.0, label.canary, 1.0)
    return no_match()


def tier2_lcs(source_text: str, sink_text: str, threshold: float) -> TierResult:
    source = normalize_text(strip_canaries(source_text))
    sink = normalize_text(strip_canaries(sink_text))
    shortest = min(len(source), len(sink))
    if shortest < MIN_LCS_LENGTH:
        return no_match()
    score = lcs_length(source, sink) / shortest
    if score >= threshold:
        return TierResult(Tier.LCS, score, _excerpt(sink), threshold)
    return TierResult(Tier.NONE, score)


async def tier3_semantic(source_text: str, sink_text: str, provider, threshold: float) -> TierResult:
    """
    Full-document cosine similarity, floored at 0.

    Raises:
        EmbeddingError: provider failures propagate to the cascade
    """
    source = strip_canaries(source_text).strip()
    sink = strip_canaries(sink_text).strip()
    if not source or not sink:
        return no_match()
    source_vec = await provider.embed(source)
    sink_vec = await provider.embed(sink)
    score = max(0.0, cosine(source_vec, sink_vec))
    if score >= threshold:
        return TierResult(Tier.SEMANTIC, score, _excerpt(sink), threshold)
    return TierResult(Tier.NONE, score)


async def tier4_coverage(
    source_text: str,
    sink_text: str,
    provider,
    theta_sem: float,
    theta_cov: float,
    chunk_sentences: int,
) -> TierResult:
    """
    Chunk-level similarity with a coverage guard.

    Fires when at least one chunk reaches theta_sem and the fraction of
    such chunks reaches theta_cov; the score is the best chunk similarity.

    Raises:
        EmbeddingError: provider failures propagate to the cascade
    """
    chunks = chunk_text(strip_canaries(source_text), chunk_sentences)
    sink = strip_canaries(sink_text).strip()
    if not chunks or not sink:
        return no_match()
    sink_vec = await provider.embed(sink)
    chunk_vecs = await provider.embed_many(chunks)
    similarities = [max(0.0, cosine(vec, sink_vec)) for vec in chunk_vecs]
    matching = sum(1 for s in similarities if s >= theta_sem)
    best = max(range(len(chunks)), key=lambda i: similarities[i])
    if matching >= 1 and matching / len(chunks) >= theta_cov:
        return TierResult(Tier.COVERAGE, similarities[best], _excerpt(chunks[best]), theta_sem)
    return TierResult(Tier.NONE, similarities[best])
