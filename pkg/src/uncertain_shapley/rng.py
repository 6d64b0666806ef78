"""Counter-based random substreams.

Every random number is a pure function of ``(seed, domain, key, counter)``.
Work can therefore be split across any number of workers, in any order,
without changing a single draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

#: Stream domains, kept apart so coalition and permutation streams never collide.
COALITION = 1
PERMUTATION = 2


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def stream_keys(seed: int, domain: int, ids: np.ndarray | int) -> np.ndarray:
    """Per-stream 64-bit states derived from the master seed and stream ids."""
    ids = np.asarray(ids, dtype=np.uint64)
    s = mix64(np.uint64(seed & _MASK64))
    with np.errstate(over="ignore"):
        d = mix64(np.uint64(domain) * _GOLDEN + s)
        return mix64(mix64(ids + _GOLDEN) ^ d)


def uniforms(seed: int, domain: int, ids: np.ndarray, count: int, offset: int = 0) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), shape ``(len(ids), count)``.

    Entry ``[r, k]`` is draw number ``offset + k`` of stream ``ids[r]``.
    """
    keys = stream_keys(seed, domain, np.atleast_1d(ids))[:, None]
    ctr = np.arange(offset, offset + count, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        x = mix64(keys + (ctr + np.uint64(1)) * _GOLDEN)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class Substream:
    """One deterministic stream identified by ``(seed, domain, key)``."""

    seed: int
    domain: int
    key: int

    def uniform(self, size: int, offset: int = 0) -> np.ndarray:
        return uniforms(self.seed, self.domain, np.array([self.key]), size, offset)[0]

    def normal(self, size: int, offset: int = 0) -> np.ndarray:
        return ndtri(self.uniform(size, offset))

    def generator(self) -> np.random.Generator:
        """A numpy Generator seeded from this stream, for user supplied samplers."""
        state = int(stream_keys(self.seed, self.domain, self.key))
        return np.random.Generator(np.random.Philox(key=state))
