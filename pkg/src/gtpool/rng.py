"""Deterministic, platform-independent PRNG.

A splitmix64-seeded xorshift64* generator drives all randomness in the
package (parameter init, dropout masks, fold shuffles, random graphs), so a
run is reproducible bit-for-bit from its integer seed on any platform. Bulk
draws use a counter-based splitmix64 stream so large masks vectorize.
"""

from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (output, advanced state)."""
    state = (state + _GOLDEN) & _M64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31), state


def mix_seed(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit seed (for derived streams)."""
    state = 0
    for part in parts:
        state = (state ^ (int(part) & _M64)) & _M64
        out, state = _splitmix64(state)
        state = out
    out, _ = _splitmix64(state)
    return out


def _splitmix64_array(counters: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 counters."""
    with np.errstate(over="ignore"):
        z = counters + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


class Rng:
    """xorshift64* stream seeded through splitmix64."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        out, state = _splitmix64(int(seed) & _M64)
        out2, _ = _splitmix64(state)
        self._state = (out ^ out2) or _GOLDEN  # xorshift state must be nonzero

    def next_u64(self) -> int:
        s = self._state
        s ^= s >> 12
        s = (s ^ (s << 25)) & _M64
        s ^= s >> 27
        self._state = s
        return (s * 0x2545F4914F6CDD1D) & _M64

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One double in [lo, hi) with 53 random bits."""
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Array of uniforms from a counter stream keyed off the main state."""
        n = int(np.prod(shape))
        base = np.uint64(self.next_u64())
        with np.errstate(over="ignore"):
            counters = base + np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
        bits = _splitmix64_array(counters)
        u = (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return (lo + (hi - lo) * u).reshape(shape)

    def randrange(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randrange needs n >= 1, got {n}")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def spawn(self) -> "Rng":
        """Independent child generator derived from this stream."""
        return Rng(self.next_u64())
