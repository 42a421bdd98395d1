"""Seeded, splittable random streams.

A stream is identified by ``(root_seed, stream_id)`` and backed by numpy's
Philox counter-based generator keyed through ``SeedSequence(root_seed,
spawn_key=(stream_id,))``. Draws are single-threaded, so a stream yields the
same bits regardless of how many worker threads are configured.
"""
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RandomSource:
    root_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("root_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")
            object.__setattr__(self, name, int(value))

    def generator(self):
        seq = np.random.SeedSequence(self.root_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, key):
        """Child stream keyed by an integer (block index, trial number, ...)."""
        mixed = _splitmix64(self.stream_id ^ _splitmix64(int(key) & _MASK))
        return RandomSource(self.root_seed, mixed)

    def to_dict(self):
        return {"root_seed": self.root_seed, "stream_id": self.stream_id}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["root_seed"]), int(d.get("stream_id", 0)))


def as_source(seed):
    """Accept a RandomSource, an int, or a ``{"root_seed", "stream_id"}`` dict."""
    if isinstance(seed, RandomSource):
        return seed
    if isinstance(seed, dict):
        return RandomSource.from_dict(seed)
    return RandomSource(int(seed))
