"""
Remote Embedding HTTP Client
Async HTTP client for a JSON-over-HTTP sentence-embedding service
"""

import asyncio
import logging
import math
from typing import List, Optional, Sequence

import aiohttp
import numpy as np

from .base import DimensionMismatch, EmbeddingVector, ProviderUnavailable

logger = logging.getLogger(__name__)


class RemoteEmbeddingClient:
    """Async HTTP client for a sentence-embedding service"""

    def __init__(
        self,
        endpoint: str,
        timeout_ms: int = 10000,
        max_in_flight: int = 8,
        dimension: Optional[int] = None,
    ):
        """
        Initialize embedding client

        Args:
            endpoint: URL accepting POST {"texts": [...]}
            timeout_ms: Per-request timeout in milliseconds
            max_in_flight: Maximum concurrent requests
            dimension: Expected vector dimension; learned from the first
                response when omitted
        """
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms
        self.dimension = dimension
        self.session: Optional[aiohttp.ClientSession] = None
        self._semaphore = asyncio.Semaphore(max_in_flight)

    async def __aenter__(self):
        """Async context manager entry"""
        await self.connect()
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        """Async context manager exit"""
        await self.close()

    async def connect(self):
        """Initialize the HTTP session"""
        if self.session is None:
            timeout = aiohttp.ClientTimeout(total=self.timeout_ms / 1000)
            self.session = aiohttp.ClientSession(timeout=timeout)

    async def close(self):
        """Close the HTTP session"""
        if self.session:
            await self.session.close()
            self.session = None

    def _parse_vectors(self, payload: object, expected_count: int) -> List[EmbeddingVector]:
        if not isinstance(payload, dict):
            raise ProviderUnavailable("Embedding response is not a JSON object")
        vectors = payload.get("vectors")
        dimension = payload.get("dimension")
        if not isinstance(vectors, list) or len(vectors) != expected_count:
            raise ProviderUnavailable("Embedding response has wrong vector count")
        if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension < 1:
            raise ProviderUnavailable("Embedding response lacks a valid dimension")
        if self.dimension is None:
            self.dimension = dimension
        elif dimension != self.dimension:
            raise DimensionMismatch(self.dimension, dimension)

        parsed = []
        for values in vectors:
            if not isinstance(values, list) or len(values) != self.dimension:
                found = len(values) if isinstance(values, list) else 0
                raise DimensionMismatch(self.dimension, found)
            if not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
                for v in values
            ):
                raise ProviderUnavailable("Embedding response contains non-finite values")
            parsed.append(np.asarray(values, dtype=np.float64))
        return parsed

    async def embed_many(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        """
        Embed a batch of texts

        Raises:
            ProviderUnavailable: service unreachable, timed out or returned an error
            DimensionMismatch: response vectors have the wrong length
        """
        if not texts:
            return []
        await self.connect()
        async with self._semaphore:
            try:
                async with self.session.post(
                    self.endpoint, json={"texts": list(texts)}
                ) as response:
                    if response.status != 200:
                        error_text = await response.text()
                        logger.error(
                            f"Embedding request failed: {response.status} - {error_text}"
                        )
                        raise ProviderUnavailable(
                            f"Embedding request failed: {response.status}"
                        )
                    payload = await response.json(content_type=None)
            except (aiohttp.ClientError, asyncio.TimeoutError) as e:
                logger.error(f"Embedding service unreachable: {e}")
                raise ProviderUnavailable(f"Service communication error: {e}")
        vectors = self._parse_vectors(payload, len(texts))
        logger.debug(f"Embedded {len(texts)} texts via {self.endpoint}")
        return vectors

    async def embed(self, text: str) -> EmbeddingVector:
        """Embed one text; empty text is the zero vector"""
        if not text:
            if self.dimension is None:
                # dimension is learned from a real response first
                await self.embed_many(["probe"])
            return np.zeros(self.dimension, dtype=np.float64)
        return (await self.embed_many([text]))[0]
