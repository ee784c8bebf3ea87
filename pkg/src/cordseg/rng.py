"""Deterministic random streams built on the splitmix64 mixing function.

Every random draw in the package flows through SplitMix64 streams, never
through numpy's own generators, so a (seed, consumption order) pair
reproduces bit-identical values regardless of numpy version or worker
count.  The i-th output of a stream is mix(seed + (i+1)*GOLDEN), which lets
bulk draws vectorize over a counter instead of looping over state updates.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """Splitmix64 output function on a 64-bit integer."""
    z = (int(x) + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive(seed: int, *stream: int) -> int:
    """Derive an independent 64-bit seed from a base seed and stream ids.

    Same arguments give the same seed; distinct stream ids give
    decorrelated streams (e.g. per-sample or per-epoch substreams).
    """
    h = mix64(seed)
    for s in stream:
        h = mix64(h ^ mix64(s & _MASK64))
    return h


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful deterministic stream of 64-bit words and derived floats."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64
        self._count = 0

    def u64(self) -> int:
        key = (self._state + self._count * _GOLDEN) & _MASK64
        self._count += 1
        return mix64(key)

    def u64_array(self, n: int) -> np.ndarray:
        if n < 0:
            raise DomainError(f"draw count must be >= 0, got {n}")
        counters = np.arange(self._count, self._count + n, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            keys = np.uint64(self._state) + (counters * np.uint64(_GOLDEN)) + np.uint64(_GOLDEN)
            return _mix64_array(keys)

    def f64(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.u64() >> 11) * 2.0**-53

    def f64_array(self, n: int) -> np.ndarray:
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal_array(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """n standard-normal float64 draws via Box-Muller on stream pairs."""
        pairs = (n + 1) // 2
        # u1 in (0, 1] so log stays finite
        u1 = ((self.u64_array(pairs) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53
        u2 = self.f64_array(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return mean + std * out[:n]

    def randbelow(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise DomainError(f"bound must be positive, got {bound}")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % bound)
        while True:
            r = self.u64()
            if r < limit:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        order = list(range(n))
        self.shuffle(order)
        return order
