"""Stable, process-independent RNG derivation.

Built-in ``hash()`` is salted per process, so every seeded stream in the
simulator is derived by hashing its identifying parts with sha256 instead.
"""
from __future__ import annotations

import hashlib
import random


def stable_seed(*parts) -> int:
    text = "|".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_rng(*parts) -> random.Random:
    return random.Random(stable_seed(*parts))
