"""Seeded random streams.

Every random draw in the package comes from numpy's PCG64 bit generator.
A stream is identified by ``(seed, tag)``; the pair is hashed with SHA-256
and the first 16 bytes become the 128-bit PCG64 seed, so streams for
different purposes are independent and reproducible on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, tag: str) -> int:
    """Return a 64-bit integer seed derived from ``seed`` and a purpose tag."""
    digest = hashlib.sha256(f"{int(seed)}/{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, tag: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{int(seed)}/{tag}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))
