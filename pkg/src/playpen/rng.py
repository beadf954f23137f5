"""Portable deterministic random number generation.

Every stochastic component in the package draws from a SplitMix64 stream, so
identical seeds give bit-identical runs on any platform and Python version.
The algorithm is the reference SplitMix64 (Steele, Lea & Flood): the 64-bit
state advances by the golden-ratio increment and outputs are finalized with
two xor-shift-multiply rounds. Uniform doubles use the top 53 bits.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _fnv1a(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """SplitMix64 stream with convenience draws used across the package."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix(self.state)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def randrange(self, n: int) -> int:
        # Rejection sampling keeps the draw unbiased for any n.
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def choice(self, seq):
        if not seq:
            raise IndexError("choice on empty sequence")
        return seq[self.randrange(len(seq))]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order determined by the stream."""
        if k > len(seq):
            raise ValueError("sample larger than population")
        pool = list(seq)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.randrange(len(pool))))
        return out

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def spawn(self, tag: str) -> "SplitMix64":
        """Independent child stream; does not consume from this stream."""
        return SplitMix64(_mix(self.state ^ _fnv1a(tag)))


def derive_seed(seed: int, tag: str) -> int:
    """Stable 64-bit sub-seed for (seed, tag); used to key episode streams."""
    return _mix((seed & _MASK64) ^ _fnv1a(tag))
