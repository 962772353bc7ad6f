"""Deterministic random streams for instance generation.

Coefficient draws must be bit-identical across platforms and library
versions, so the package carries its own small generator instead of
depending on numpy's (whose bit streams are only stable per numpy
version for a given ``BitGenerator``).  The stream is xoshiro256**
seeded through splitmix64; normals come from the polar-free Box-Muller
transform, consuming exactly two 64-bit draws per variate.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_TWO53 = float(1 << 53)


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class RandomStream:
    """xoshiro256** generator with a fixed normal-sampling recipe.

    Parameters
    ----------
    seed : int
        Any 64-bit unsigned seed.  The four state words are produced by
        four successive splitmix64 outputs.
    """

    def __init__(self, seed: int):
        state = seed & _MASK
        words = []
        for _ in range(4):
            state, w = _splitmix64(state)
            words.append(w)
        self._s = words

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        """Uniform variate in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / _TWO53

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes exactly two draws.

        Uses ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``; the ``1 - u1``
        argument keeps the logarithm away from zero.
        """
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, count: int) -> list[float]:
        return [self.normal() for _ in range(count)]
