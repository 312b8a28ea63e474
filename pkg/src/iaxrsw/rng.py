"""Seeded random numbers for reproducible traces.

splitmix64 is used everywhere randomness is needed: it is tiny, exactly
specified, and trivial to reimplement bit-for-bit in any language, so a
trace produced here can be reproduced outside this codebase from the seed
alone. Trace files record the generator name (``splitmix64``).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

GENERATOR_NAME = "splitmix64"


class SplitMix64:
    """splitmix64 sequence generator seeded with a 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def bytes(self, n: int) -> bytes:
        """n pseudo-random bytes: successive outputs, big-endian, truncated."""
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:n])


def stream_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent substream seeds from a master seed.

    Substream k is seeded with the (k+1)-th output of SplitMix64(seed);
    consumers assign fixed slot indices so adding streams never perturbs
    existing ones.
    """
    master = SplitMix64(seed)
    return [master.next_u64() for _ in range(count)]
