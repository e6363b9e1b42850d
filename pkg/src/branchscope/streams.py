"""Counter-based random streams.

Every individual of a simulated tree owns a 64-bit key.  Its uniforms are
``mix64(key + (j + 1) * GOLDEN)`` for ``j = 0, 1, ...`` and the key of its
``i``-th child is ``mix64(key ^ ((i + 1) * CHILD))``.  The tree is therefore a
deterministic function of the root key alone, independent of the order in
which a simulator visits individuals.  The compiled kernel reproduces these
formulas bit for bit.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
CHILD = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M52 = 2.0 ** -52


def mix64(z: int) -> int:
    """SplitMix64 finaliser (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def to_uniform(bits: int) -> float:
    """Map 64 random bits to the open interval (0, 1).

    Uses the top 52 bits plus a half-ulp offset so that neither 0 nor 1 can
    occur; the result is exact in binary64.
    """
    return ((bits >> 12) + 0.5) * _TWO_M52


def root_key(seed: int, replicate: int = 0) -> int:
    """Key of the ancestor for replicate ``replicate`` of a run seeded ``seed``."""
    return mix64((mix64(seed) + (replicate + 1) * GOLDEN) & MASK64)


def child_key(key: int, index: int) -> int:
    return mix64(key ^ (((index + 1) * CHILD) & MASK64))


def draw(key: int, j: int) -> float:
    """The ``j``-th uniform of the stream keyed ``key``."""
    return to_uniform(mix64((key + (j + 1) * GOLDEN) & MASK64))


class CounterStream:
    """Sequential view over the uniforms of one key."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    def uniform(self) -> float:
        u = draw(self.key, self.counter)
        self.counter += 1
        return u

    def child(self, index: int) -> "CounterStream":
        return CounterStream(child_key(self.key, index))

    def __repr__(self):
        return f"CounterStream(key={self.key:#018x}, counter={self.counter})"
