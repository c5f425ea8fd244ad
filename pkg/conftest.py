"""Shared fixtures for the test suite."""

import sys
from pathlib import Path
from typing import Callable, Iterable

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.embedding_provider import CountingProvider, LocalHashingProvider  # noqa: E402
from src.trace_model import ToolEvent, load_policy_file, serialize_trace  # noqa: E402


def make_event(session: str, index: int, tool: str, result: str = "", **args: str) -> ToolEvent:
    return ToolEvent(session_id=session, index=index, tool_name=tool, args=dict(args), result=result)


@pytest.fixture
def policy():
    return load_policy_file(None)


@pytest.fixture
def local_provider():
    return LocalHashingProvider()


@pytest.fixture
def counting_provider():
    return CountingProvider(LocalHashingProvider())


@pytest.fixture
def write_trace(tmp_path) -> Callable[[str, Iterable[ToolEvent]], Path]:
    def write(name: str, events: Iterable[ToolEvent]) -> Path:
        path = tmp_path / name
        path.write_bytes(serialize_trace(list(events)))
        return path

    return write


@pytest.fixture
def event() -> Callable[..., ToolEvent]:
    return make_event

