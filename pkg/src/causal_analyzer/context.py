"""
Neutralized contexts: the agent history with one source result swapped
for a task-neutral placeholder.
"""

import json
import logging
import re
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from ..trace_model import Policy, ToolEvent

logger = logging.getLogger(__name__)

RETRIEVAL_PLACEHOLDER = "No relevant information found."

_RETRIEVAL_TOOL = re.compile(
    r"search|retriev|read|recall|scrape|browse|fetch|query|extract|kb|lookup|load",
    re.IGNORECASE,
)


class CausalError(Exception):
    """Base class for counterfactual probing failures."""


class EventNotInPrefix(CausalError):
    def __init__(self, ref: Tuple[str, int]):
        self.ref = ref
        super().__init__(f"Event {ref[0]}#{ref[1]} is not part of the context prefix")


def placeholder_for(tool_name: str, policy: Optional[Policy] = None) -> str:
    """Policy override first, then the retrieval placeholder, else empty."""
    if policy is not None and tool_name in policy.placeholders:
        return policy.placeholders[tool_name]
    if _RETRIEVAL_TOOL.search(tool_name):
        return RETRIEVAL_PLACEHOLDER
    return ""


def render_event(event: ToolEvent) -> str:
    args = json.dumps(event.args, sort_keys=True, ensure_ascii=False)
    return f"[{event.session_id}#{event.index}] {event.tool_name}({args}) -> {event.result}"


@dataclass(frozen=True)
class NeutralizedContext:
    original_events: Tuple[ToolEvent, ...]
    replaced_event: Tuple[str, int]
    placeholder_text: str

    @property
    def neutralized_events(self) -> List[ToolEvent]:
        return [
            replace(e, result=self.placeholder_text) if e.ref == self.replaced_event else e
            for e in self.original_events
        ]

    @property
    def replaced_tool(self) -> str:
        for event in self.original_events:
            if event.ref == self.replaced_event:
                return event.tool_name
        return ""

    def render_original(self) -> str:
        return "\n".join(render_event(e) for e in self.original_events)

    def render_neutralized(self) -> str:
        return "\n".join(render_event(e) for e in self.neutralized_events)


def build_neutralized_context(
    trace_prefix: Sequence[ToolEvent],
    source_event_ref: Tuple[str, int],
    policy: Optional[Policy] = None,
) -> NeutralizedContext:
    """
    Replace one event's result with the placeholder for its tool.

    Raises:
        EventNotInPrefix: the referenced event is not in the prefix
    """
    ref = tuple(source_event_ref)
    target = next((e for e in trace_prefix if e.ref == ref), None)
    if target is None:
        raise EventNotInPrefix(ref)
    placeholder = placeholder_for(target.tool_name, policy)
    logger.debug(f"Neutralizing {ref[0]}#{ref[1]} ({target.tool_name}) with {placeholder!r}")
    return NeutralizedContext(tuple(trace_prefix), ref, placeholder)
