"""Deterministic rng substreams derived from one global seed.

Work scheduling must never change outputs, so every unit of work (a video,
a pair, a stage) gets its own stream keyed by stable string labels. The
derivation is sha256-based: platform- and process-independent, unlike
hash().
"""

from __future__ import annotations

import hashlib
import random

_SEP = b"\x1f"


def derive_seed(root: int, *parts: object) -> int:
    """Collapse (root seed, labels...) into a 64-bit substream seed."""
    payload = _SEP.join(str(p).encode("utf-8") for p in (root, *parts))
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derive_rng(root: int, *parts: object) -> random.Random:
    return random.Random(derive_seed(root, *parts))
