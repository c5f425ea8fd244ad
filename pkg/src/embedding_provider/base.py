"""
Provider interface, cosine similarity, and provider wrappers.
"""

import asyncio
import logging
from typing import Dict, List, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

EmbeddingVector = np.ndarray


class EmbeddingError(Exception):
    """Base class for embedding failures."""


class ProviderUnavailable(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    def __init__(self, expected: int, found: int):
        self.expected = expected
        self.found = found
        super().__init__(f"Embedding dimension mismatch: expected {expected}, found {found}")


class EmbeddingProvider(Protocol):
    dimension: int

    async def embed(self, text: str) -> EmbeddingVector: ...

    async def embed_many(self, texts: Sequence[str]) -> List[EmbeddingVector]: ...


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """
    Cosine similarity clamped to [-1, 1].

    Zero-norm inputs have similarity 0.

    Raises:
        DimensionMismatch: vectors differ in length
    """
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[0], b.shape[0])
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    value = float(np.dot(a, b)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))


class CountingProvider:
    """Counts texts sent to the wrapped provider."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.dimension = inner.dimension
        self.calls = 0

    async def embed(self, text: str) -> EmbeddingVector:
        self.calls += 1
        return await self.inner.embed(text)

    async def embed_many(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        self.calls += len(texts)
        return await self.inner.embed_many(texts)


class MemoizedProvider:
    """Per-run text -> vector memo; concurrent requests for one text share a call."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.dimension = inner.dimension
        self._cache: Dict[str, EmbeddingVector] = {}
        self._pending: Dict[str, asyncio.Future] = {}

    async def embed(self, text: str) -> EmbeddingVector:
        if text in self._cache:
            return self._cache[text]
        if text in self._pending:
            return await self._pending[text]
        future = asyncio.ensure_future(self.inner.embed(text))
        self._pending[text] = future
        try:
            vector = await future
        finally:
            self._pending.pop(text, None)
        self._cache[text] = vector
        return vector

    async def embed_many(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        return list(await asyncio.gather(*(self.embed(t) for t in texts)))
