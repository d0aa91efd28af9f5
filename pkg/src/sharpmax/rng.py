"""Counter-based random streams.

Draw ``i`` of a run is a pure function of ``(seed, stream, i)``: the Philox
key comes from ``(seed, stream)`` and the Philox counter is ``i``.  Each draw
consumes exactly one counter block, i.e. four doubles, so any partition of
the sample indices across workers reproduces the same numbers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIFORMS_PER_DRAW = 4
_U64 = 1 << 64


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValueError(f"{name}={v!r} must be an unsigned 64-bit integer")

    def key(self) -> np.ndarray:
        return np.random.SeedSequence([int(self.seed), int(self.stream)]).generate_state(2, np.uint64)

    def generator(self, start: int = 0) -> np.random.Generator:
        """Generator positioned at draw ``start``."""
        counter = np.zeros(4, dtype=np.uint64)
        counter[0] = np.uint64(start % _U64)
        counter[1] = np.uint64(start // _U64)
        return np.random.Generator(np.random.Philox(key=self.key(), counter=counter))

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """``count`` rows of four uniforms on [0, 1), row ``j`` belonging to draw ``start + j``."""
        return self.generator(start).random((count, UNIFORMS_PER_DRAW))

    def oracle_key(self) -> int:
        """64-bit key for the path oracle's per-path seeds."""
        k = np.random.SeedSequence([int(self.seed), int(self.stream), 0x6F7261636C65]).generate_state(1, np.uint64)
        return int(k[0])
