"""
Canary tokens appended to source content at ingestion.
"""

import logging
import random
import re
import secrets
from typing import Iterable, Optional, Set, Tuple

logger = logging.getLogger(__name__)

CANARY_PATTERN = re.compile(r"NT-[0-9a-f]{4}-[0-9a-f]{4}")
_TRAILING_CANARY = re.compile(r" (NT-[0-9a-f]{4}-[0-9a-f]{4})$")
_ANY_CANARY = re.compile(r"\s?NT-[0-9a-f]{4}-[0-9a-f]{4}")


def format_canary(value: int) -> str:
    digits = f"{value & 0xFFFFFFFF:08x}"
    return f"NT-{digits[:4]}-{digits[4:]}"


def inject_canary(source_text: str, rng: Optional[random.Random] = None) -> Tuple[str, str]:
    """Append a fresh `NT-xxxx-xxxx` token after a single space."""
    value = rng.getrandbits(32) if rng is not None else int(secrets.token_hex(4), 16)
    token = format_canary(value)
    return f"{source_text} {token}", token


def find_canary(text: str) -> Optional[str]:
    """The canary a producer already appended to this text, if any."""
    match = _TRAILING_CANARY.search(text)
    return match.group(1) if match else None


def strip_canaries(text: str) -> str:
    return _ANY_CANARY.sub("", text)


class CanaryMinter:
    """Seeded canary source that never hands out the same token twice."""

    def __init__(self, seed: int = 0, reserved: Iterable[str] = ()):
        self._rng = random.Random(seed)
        self._issued: Set[str] = set(reserved)

    def reserve(self, token: str):
        self._issued.add(token)

    def inject(self, source_text: str) -> Tuple[str, str]:
        while True:
            augmented, token = inject_canary(source_text, self._rng)
            if token not in self._issued:
                self._issued.add(token)
                return augmented, token
            logger.debug(f"Canary collision on {token}, retrying")
