"""Portable, fully specified random streams.

The generator is xoshiro256** seeded through splitmix64, so any language can
reproduce a stream bit-for-bit from ``(seed, draws)``:

* state: four 64-bit words ``s0..s3`` filled by four consecutive splitmix64
  outputs starting from ``seed``;
* ``next_u64``: the reference xoshiro256** step;
* ``random()``: ``(next_u64() >> 11) * 2**-53``, a double in ``[0, 1)``;
* ``randbelow(n)``: rejection sampling on ``next_u64() % n`` with the
  threshold ``2**64 - (2**64 % n)``;
* ``normal()``: basic Box-Muller, ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` with
  ``u1`` drawn before ``u2``; the sine branch is discarded so every normal
  costs exactly two uniforms.

``draws`` counts ``next_u64`` calls since seeding.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
ALGORITHM = "xoshiro256starstar+splitmix64"


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Independent seed for a named sub-stream (e.g. test trials)."""
    _, out = splitmix64((seed ^ ((stream * 0xD1B54A32D192ED03) & MASK64)) & MASK64)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    def __init__(self, seed: int = 0):
        self.seed = int(seed) & MASK64
        sm = self.seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s = words
        self.draws = 0

    @classmethod
    def from_state(cls, words, draws: int = 0) -> "Xoshiro256":
        rng = cls(0)
        rng._s = [int(w) & MASK64 for w in words]
        rng.draws = draws
        return rng

    @classmethod
    def restore(cls, seed: int, draws: int) -> "Xoshiro256":
        rng = cls(seed)
        for _ in range(draws):
            rng.next_u64()
        return rng

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        self.draws += 1
        return result

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def coin(self) -> bool:
        return self.next_u64() >> 63 == 1

    def normal(self) -> float:
        u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, size) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        return np.array([self.normal() for _ in range(count)], dtype=np.float64).reshape(shape)

    def uniforms(self, low: float, high: float, size) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        span = high - low
        return np.array([low + span * self.random() for _ in range(count)], dtype=np.float64).reshape(shape)

    def descriptor(self) -> dict:
        return {"algorithm": ALGORITHM, "seed": self.seed, "draws": self.draws}
