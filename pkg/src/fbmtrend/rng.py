"""Seed-stream derivation for reproducible Monte Carlo.

Every stochastic routine in the package derives its generator from a root
seed plus a path of labels (stage names, replicate indices).  Streams built
from the same (seed, path) are identical regardless of evaluation order or
parallel scheduling, which is what makes whole-pipeline runs byte-stable.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "spawn_key"]


def spawn_key(part: int | str) -> int:
    """Map a path label to a 32-bit spawn-key entry."""
    if isinstance(part, int):
        if part < 0:
            raise ValueError("integer path labels must be non-negative")
        return part & 0xFFFFFFFF
    digest = hashlib.blake2s(part.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Counter-based generator for (seed, *path).

    Philox is used so that per-replicate streams are statistically
    independent and cheap to create in bulk.
    """
    seq = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))
