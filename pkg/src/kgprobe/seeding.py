"""Stable seed derivation so per-item randomness is reproducible everywhere."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Map arbitrary labels to a 64-bit seed, stable across runs and platforms."""
    blob = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")
