"""SplitMix64 random streams.

Python's ``random`` module is avoided on purpose: traces must be
bit-reproducible from ``(seed, config, state)`` independent of the
interpreter version, so every draw goes through this 64-bit mixer.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _tag_hash(tag: str) -> int:
    # FNV-1a over UTF-8 bytes
    h = 0xCBF29CE484222325
    for b in tag.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, tag: str = "", index: int = 0) -> int:
    """Seed of an independent sub-stream; a pure function of its arguments."""
    z = mix64((seed & MASK64) + GOLDEN_GAMMA)
    z = mix64(z ^ _tag_hash(tag))
    return mix64(z ^ mix64((index & MASK64) + 2 * GOLDEN_GAMMA))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``, without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - (1 << 64) % n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def choice(self, items):
        return items[self.below(len(items))]


def rng_stream(seed: int, tag: str = "", index: int = 0) -> SplitMix64:
    return SplitMix64(derive_seed(seed, tag, index))
