"""
Deterministic hashed bag-of-words embeddings for offline, reproducible audits.
"""

import re
from typing import List, Sequence

import numpy as np

from .base import EmbeddingVector

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK_64 = 0xFFFFFFFFFFFFFFFF

_TOKEN = re.compile(r"[^\W_]+")


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK_64
    return h


def tokenize(text: str) -> List[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


class LocalHashingProvider:
    """
    Token-frequency vector over `dimension` FNV-1a bins, L2-normalized.

    Texts with the same token multiset embed identically; empty text is the
    zero vector.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension

    def bin_of(self, token: str) -> int:
        return fnv1a_64(token.encode("utf-8")) % self.dimension

    def embed_sync(self, text: str) -> EmbeddingVector:
        vector = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            vector[self.bin_of(token)] += 1.0
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        return vector

    async def embed(self, text: str) -> EmbeddingVector:
        return self.embed_sync(text)

    async def embed_many(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        return [self.embed_sync(t) for t in texts]
