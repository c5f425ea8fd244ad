"""
Multi-source attribution and supporting string evidence.
"""

from typing import Dict, List, Optional, Sequence, Tuple

from ..explicit_tracker import tier2_lcs
from .judge import JudgeVerdict


def attribute(
    lineage_labels: Sequence[str], verdicts: Dict[str, JudgeVerdict]
) -> List[Tuple[str, float]]:
    """
    Labels whose neutralization stops the sink call, with the judge's
    confidence passed through. Several causal labels are all reported.

    Ordered by descending confidence, then label id.
    """
    causal = [
        (label_id, verdicts[label_id].confidence)
        for label_id in lineage_labels
        if label_id in verdicts and not verdicts[label_id].would_call_anyway
    ]
    return sorted(causal, key=lambda item: (-item[1], item[0]))


def supporting_string_evidence(
    source_text: str, sink_texts: Sequence[str], threshold: float
) -> Optional[float]:
    """Best LCS ratio across sink texts when it reaches the implicit-flow threshold."""
    best = max((tier2_lcs(source_text, text, threshold).score for text in sink_texts), default=0.0)
    return best if best >= threshold and best > 0.0 else None
