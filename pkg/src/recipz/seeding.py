"""Counter-based random substreams.

Every random draw in an experiment comes from a generator keyed by
``(seed, purpose, *indices)``, never from shared state, so results do not
depend on how work is split across processes.
"""

from __future__ import annotations

import zlib

import numpy as np


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def substream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [int(seed) & 0xFFFFFFFF, int(seed) >> 32, purpose_key(purpose)] + [int(i) for i in indices]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
