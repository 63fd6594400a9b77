"""Counter-based SplitMix64 generator.

Every 64-bit output is a pure function of ``(seed, stream, counter)``::

    key  = mix64(seed + GOLDEN * (stream + 1))
    word = mix64(key + GOLDEN * (counter + 1))

where ``mix64`` is the SplitMix64 finalizer and arithmetic is mod 2**64.
Draws can therefore be generated in any order or in vectorized batches and
still reproduce the same sequence, which is what makes sampled campaigns
replayable independent of worker count.
"""

import numpy as np

GENERATOR_NAME = "splitmix64-counter/1"

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64(seed + GOLDEN * (stream + 1))


def word(key: int, counter: int) -> int:
    return mix64(key + GOLDEN * (counter + 1))


def unit_float(w: int) -> float:
    """Top 53 bits of a word as a float in [0, 1)."""
    return (w >> 11) * 2.0**-53


def words(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized :func:`word` over a uint64 array of counters."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + np.uint64(GOLDEN) * (c + np.uint64(1))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def unit_floats(ws: np.ndarray) -> np.ndarray:
    return (ws >> np.uint64(11)).astype(np.float64) * 2.0**-53
