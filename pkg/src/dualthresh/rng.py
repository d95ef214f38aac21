"""Seed derivation and generator construction.

Every random stream in the package comes from ``make_rng(seed)``, which wraps
NumPy's PCG64 bit generator (PCG XSL-RR 128/64).  Child seeds are derived with
``mix_seed``, a SplitMix64 step, so a Monte Carlo run identified by
``(base_seed, point_index, run_index)`` always sees the same stream no matter
which worker evaluates it or in which order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (state advanced by the golden gamma)."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    """Derive the child seed ``mix(seed, index)``.

    ``mix(s, i) = splitmix64(splitmix64(s) ^ splitmix64(i))``, all in 64-bit
    arithmetic.  Distinct indices give statistically independent children.
    """
    if seed < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative 64-bit integers")
    return splitmix64(splitmix64(seed & MASK64) ^ splitmix64(index & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))
