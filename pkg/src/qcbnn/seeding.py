"""Deterministic, purpose-tagged random streams.

Every stochastic component draws from its own stream derived from
(seed, tag, indices...), so results do not depend on call order or on
how work is scheduled across workers.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *path) -> np.random.Generator:
    """Independent generator for a (seed, path) address.

    Path elements may be ints or short strings; strings are hashed with
    crc32 so the mapping is stable across processes and platforms.
    """
    parts = [int(seed) & 0xFFFFFFFF]
    for item in path:
        if isinstance(item, str):
            parts.append(zlib.crc32(item.encode("utf-8")))
        else:
            parts.append(int(item) & 0xFFFFFFFF)
    return np.random.default_rng(parts)
