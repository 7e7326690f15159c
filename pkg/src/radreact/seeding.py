"""Deterministic seed derivation.

Every random stream is keyed by ``(seed, subsystem, index)`` through
:class:`numpy.random.SeedSequence`, so a member's numbers do not depend on how
many other members exist or in which order they run.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["subsystem_key", "member_rng", "member_seedseq"]


def subsystem_key(name: str) -> int:
    """Stable 32-bit key for a subsystem name (CRC32, not Python's salted ``hash``)."""
    return zlib.crc32(name.encode("utf-8")) & 0xFFFFFFFF


def member_seedseq(seed: int, subsystem: str, index: int = 0) -> np.random.SeedSequence:
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, subsystem_key(subsystem), int(index)])


def member_rng(seed: int, subsystem: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(member_seedseq(seed, subsystem, index)))
