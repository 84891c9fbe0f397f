"""Counter-seeded pseudo-random generator with deterministic substreams.

The generator is specified by algorithm rather than by library so traces are
bit-reproducible across platforms: a splitmix64 chain expands a 64-bit seed
into xoshiro256++ state words.  Substream ``i`` of a seed consumes splitmix64
words ``4*i .. 4*i+3``, so the disturbance stream and the observation-noise
stream of one run never share state.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256pp:
    """xoshiro256++ stream; state must never be all zero."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, s0: int, s1: int, s2: int, s3: int):
        if not (s0 | s1 | s2 | s3):
            s0 = 1
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3

    @classmethod
    def from_seed(cls, seed: int, stream: int = 0) -> "Xoshiro256pp":
        """Substream ``stream`` of ``seed``; distinct streams never overlap."""
        if stream < 0:
            raise ValueError("stream index must be nonnegative")
        state = seed & _MASK64
        for _ in range(4 * stream):
            state, _ = _splitmix64(state)
        words = []
        for _ in range(4):
            state, w = _splitmix64(state)
            words.append(w)
        return cls(*words)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform01(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform01()

    def normal(self, sigma: float = 1.0) -> float:
        """Box-Muller draw; first uniform shifted into (0, 1] to keep log finite."""
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = self.uniform01()
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
