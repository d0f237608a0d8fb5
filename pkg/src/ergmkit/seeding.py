"""Hierarchical seed derivation.

All randomness flows from one root seed per invocation.  Child streams
are derived with numpy's SeedSequence spawn keys, so parallel or
sequential execution of subtasks yields identical results, and the
generator (PCG64) is named, seedable and stable across platforms.
"""

from __future__ import annotations

import numpy as np

__all__ = ["generator", "child_seed"]


def generator(root_seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for the stream addressed by (root_seed, *key)."""
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(root_seed: int, *key: int) -> int:
    """A derived integer seed, for configs that carry seeds by value."""
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
