"""splitmix64 stream and a partial Fisher-Yates shuffle on top of it.

Both are defined on 64-bit unsigned integer arithmetic only, so a given seed
produces the same sample on every platform and in every language.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound


def partial_shuffle(items: Sequence[T], k: int, seed: int) -> list[T]:
    """First ``k`` positions of a Fisher-Yates shuffle: position i swaps with i + below(n - i)."""
    rng = SplitMix64(seed)
    out = list(items)
    n = len(out)
    for i in range(min(k, n)):
        j = i + rng.below(n - i)
        out[i], out[j] = out[j], out[i]
    return out[: min(k, n)]
