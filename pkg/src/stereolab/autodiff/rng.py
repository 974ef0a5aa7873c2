"""Deterministic, splittable random streams.

A stream is fully identified by (seed, stream_id); the same pair plus the
same draw sequence yields bit-identical values on every platform (PCG64).
Child streams are derived by hashing a tag into a fresh stream_id, so
independent components of an experiment never share or race a generator.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _mix(stream_id: int, tag) -> int:
    h = hashlib.blake2b(f"{stream_id}/{tag}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


class RngStream:
    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, tag) -> "RngStream":
        """Derive an independent stream; `tag` is any string or int label."""
        return RngStream(self.seed, _mix(self.stream_id, tag))

    def normal(self, shape=(), scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=shape)

    def uniform(self, low: float = 0.0, high: float = 1.0, shape=()) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        """Uniform integers in [low, high)."""
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
