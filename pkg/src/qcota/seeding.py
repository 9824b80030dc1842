"""Deterministic seed derivation for repeats and RNG sub-streams."""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output step; a well-mixed 64-bit hash of the input."""
    z = (state + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(base: int, *indices: int) -> int:
    """Derive a child seed from a base seed and one or more stream indices."""
    state = base & MASK64
    for index in indices:
        state = splitmix64((state + (index & MASK64)) & MASK64)
    return state


def rng_from(base: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, *indices))
