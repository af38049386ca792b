"""Portable seeded random numbers.

Every random choice in the harness (train/test shuffles, bootstrap draws,
feature subsampling, MLP initialisation and batching) goes through
:class:`SplitMix64` so that a run can be replayed bit-for-bit in any language:

* state update: ``state = (state + 0x9E3779B97F4A7C15) mod 2**64``
* output mix:   ``z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9``,
                ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``,
                ``z ^ (z >> 31)`` (all products mod 2**64)
* ``randbelow(n)``: rejection sampling, draw ``x`` until
  ``x < 2**64 - (2**64 mod n)`` and return ``x mod n``
* ``random()``: ``(next() >> 11) * 2**-53``
* ``permutation(n)``: Fisher-Yates from the last index down,
  ``j = randbelow(i + 1)``
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        return np.array([low + (high - low) * self.random() for _ in range(size)])

    def permutation(self, n: int) -> np.ndarray:
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)

    def integers(self, n: int, size: int) -> np.ndarray:
        """``size`` independent draws from ``range(n)`` (with replacement)."""
        return np.array([self.randbelow(n) for _ in range(size)], dtype=np.int64)


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary labels (sha256 of ``|``-joined text)."""
    text = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")
