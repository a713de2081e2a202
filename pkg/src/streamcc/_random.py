"""Seeded hashing used for reproducible coin flips and sketch hash functions.

Coins are keyed by ``(seed, src, dst)`` instead of by call order, so two
algorithms that are equivalent under shared randomness can be run with the
same seed and compared outcome by outcome.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_U_GAMMA, _U_M1, _U_M2 = np.uint64(_GAMMA), np.uint64(_M1), np.uint64(_M2)
_U30, _U27, _U31 = np.uint64(30), np.uint64(27), np.uint64(31)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int."""
    x = (x + _GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def hash3(seed: int, a: int, b: int) -> int:
    return mix64(mix64(mix64(seed & MASK64) ^ a) ^ b)


def uniform3(seed: int, a: int, b: int) -> float:
    """Deterministic uniform draw in [0, 1) keyed by (seed, a, b)."""
    return (hash3(seed, a, b) >> 11) * (1.0 / (1 << 53))


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer; ``x`` must be a uint64 array
    (array arithmetic wraps modulo 2**64 silently)."""
    x = np.asarray(x, dtype=np.uint64)
    x = x + _U_GAMMA
    x = (x ^ (x >> _U30)) * _U_M1
    x = (x ^ (x >> _U27)) * _U_M2
    return x ^ (x >> _U31)


def derive_seed(seed: int, *keys: int) -> int:
    h = mix64(seed & MASK64)
    for k in keys:
        h = mix64(h ^ (k & MASK64))
    return h


class HashFlipper:
    """Independent biased coins addressed by an ordered vertex pair.

    ``flip(src, dst, q)`` is True with probability ``q``. The same
    ``(seed, src, dst)`` always gives the same outcome.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._base = mix64(self.seed & MASK64)

    def flip(self, src: int, dst: int, q: float) -> bool:
        if q >= 1.0:
            return True
        if q <= 0.0:
            return False
        u = (mix64(mix64(self._base ^ src) ^ dst) >> 11) * (1.0 / (1 << 53))
        return u < q


def as_flipper(seed, flipper=None):
    if flipper is not None:
        return flipper
    return HashFlipper(0 if seed is None else seed)
