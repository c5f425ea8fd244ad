"""
Embedding Provider Package

This package contains text embedding components:
- LocalHashingProvider: deterministic FNV-1a hashed bag-of-words embeddings
- RemoteEmbeddingClient: HTTP client for a sentence-embedding service
- MemoizedProvider / CountingProvider: per-run memo and call instrumentation
- cosine: clamped cosine similarity with a zero-norm convention
- make_provider: resolve a provider from CLI/config
"""

from .base import (
    CountingProvider,
    DimensionMismatch,
    EmbeddingError,
    EmbeddingProvider,
    EmbeddingVector,
    MemoizedProvider,
    ProviderUnavailable,
    cosine,
)
from .client import RemoteEmbeddingClient
from .factory import make_provider
from .local import LocalHashingProvider, fnv1a_64, tokenize

__all__ = [
    "CountingProvider",
    "DimensionMismatch",
    "EmbeddingError",
    "EmbeddingProvider",
    "EmbeddingVector",
    "LocalHashingProvider",
    "MemoizedProvider",
    "ProviderUnavailable",
    "RemoteEmbeddingClient",
    "cosine",
    "fnv1a_64",
    "make_provider",
    "tokenize",
]
