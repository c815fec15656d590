"""splitmix64 streams and seed derivation.

All seeded randomness in the package funnels through here so results are
reproducible bit-for-bit across platforms.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The reference splitmix64 generator (Steele, Lea & Flood)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix(self.state)

    def uniform(self) -> float:
        """A double strictly inside (0, 1) built from the top 53 bits."""
        return ((self.next() >> 11) + 0.5) * 2.0**-53

    def below(self, n: int) -> int:
        """An integer uniform in ``[0, n)`` (multiply-shift on 53 bits)."""
        return ((self.next() >> 11) * n) >> 53


def splitmix64_array(seed: int, count: int) -> np.ndarray:
    """The first ``count`` outputs of ``SplitMix64(seed)`` as uint64."""
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + steps * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def uniform_array(seed: int, count: int) -> np.ndarray:
    """Doubles in (0, 1) matching :meth:`SplitMix64.uniform` element for element."""
    top = splitmix64_array(seed, count) >> np.uint64(11)
    return (top.astype(np.float64) + 0.5) * 2.0**-53


def derive_seed(seed: int, *indices: int) -> int:
    """Child seed for task ``indices`` of a run seeded with ``seed``.

    Each index is folded in as ``state = splitmix64_output(state ^ index)``
    so that distinct task tuples give unrelated streams. The result is a
    non-negative 63-bit int, usable directly by ``numpy.random.default_rng``.
    """
    state = seed & MASK64
    for index in indices:
        state = SplitMix64(state ^ (index & MASK64)).next()
    return state >> 1


def task_rng(seed: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *indices))
