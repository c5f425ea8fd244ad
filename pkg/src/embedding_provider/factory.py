"""
Resolve an embedding provider from a CLI/config specification.
"""

import logging
from typing import Any, Dict, Optional

from .client import RemoteEmbeddingClient
from .local import LocalHashingProvider

logger = logging.getLogger(__name__)


def make_provider(choice: Optional[str], config: Dict[str, Any]):
    """
    Build a provider from `local`, an http(s) URL, or None (use config).

    Args:
        choice: CLI value of --embeddings
        config: output of get_embedding_config()
    """
    choice = choice or config.get("provider", "local")
    if choice == "remote":
        choice = config.get("endpoint")
    if choice == "local":
        logger.info(f"Using local hashing embeddings (dim {config.get('dimension', 256)})")
        return LocalHashingProvider(config.get("dimension", 256))
    if choice and choice.startswith(("http://", "https://")):
        logger.info(f"Using remote embeddings at {choice}")
        return RemoteEmbeddingClient(
            choice,
            timeout_ms=config.get("timeout_ms", 10000),
            max_in_flight=config.get("max_in_flight", 8),
        )
    raise ValueError(f"Unknown embedding provider: {choice!r}")
