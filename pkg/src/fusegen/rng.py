"""Deterministic random numbers for simulation.

A small counter-based generator (SplitMix64) plus the Box-Muller
transform; identical seeds produce identical streams on every platform,
which keeps simulated traces byte-for-byte reproducible.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class Rng:
    def __init__(self, seed: int):
        self.state = seed & _MASK
        self._cached_normal: float | None = None

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in (0, 1] (never 0, so it is safe inside a logarithm)."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian draw via Box-Muller; pairs are generated together and
        the second is cached."""
        if self._cached_normal is not None:
            value = self._cached_normal
            self._cached_normal = None
            return mean + std * value
        radius = math.sqrt(-2.0 * math.log(self.uniform()))
        angle = 2.0 * math.pi * self.uniform()
        self._cached_normal = radius * math.sin(angle)
        return mean + std * radius * math.cos(angle)
