"""SplitMix64 pseudo-random generator.

Every seeded quantity in the package (wavevectors, phases, pair samples)
is drawn from this generator so that realizations are reproducible
bit-for-bit across platforms and implementations.  The recurrence is::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    out = z ^ (z >> 31)

Doubles are ``(out >> 11) * 2**-53`` and bounded integers use the
multiply-shift map ``lo + ((out * span) >> 64)``.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MUL1 = 0xBF58476D1CE4E5B9
MUL2 = 0x94D049BB133111EB


class SplitMix64:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MUL1) & MASK64
        z = ((z ^ (z >> 27)) * MUL2) & MASK64
        return z ^ (z >> 31)

    def uniform(self):
        """Double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def integer(self, lo, hi):
        """Integer uniformly drawn from the closed range [lo, hi]."""
        span = hi - lo + 1
        return lo + ((self.next_u64() * span) >> 64)

    def unit_vector(self):
        """Uniform direction on the sphere from two doubles (z, azimuth)."""
        z = 2.0 * self.uniform() - 1.0
        phi = 2.0 * math.pi * self.uniform()
        s = math.sqrt(max(0.0, 1.0 - z * z))
        return (s * math.cos(phi), s * math.sin(phi), z)

    def spawn(self):
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())


def u64_block(seed, count):
    """Vectorized SplitMix64 outputs for ``count`` consecutive steps.

    Matches ``count`` calls of :meth:`SplitMix64.next_u64` on a fresh
    generator.  Used where many draws are needed at once.
    """
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(int(seed) & MASK64) + steps * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MUL2)
        return z ^ (z >> np.uint64(31))


def uniform_block(seed, count):
    """Doubles in [0, 1) matching :meth:`SplitMix64.uniform`."""
    return (u64_block(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def integer_block(seed, count, lo, hi):
    """Bounded integers matching :meth:`SplitMix64.integer` draw for draw."""
    span = hi - lo + 1
    raw = u64_block(seed, count)
    if span <= 1 << 32:
        hi32 = (raw >> np.uint64(32)).astype(np.uint64)
        lo32 = (raw & np.uint64(0xFFFFFFFF)).astype(np.uint64)
        s = np.uint64(span)
        # (raw * span) >> 64 split into 32-bit halves to stay in uint64
        return lo + ((hi32 * s + ((lo32 * s) >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)
    return np.array([lo + ((int(v) * span) >> 64) for v in raw], dtype=np.int64)
