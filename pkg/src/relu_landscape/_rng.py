"""Seeded random streams.

Every experiment derives its generators from a master seed plus a key tuple
(trial index, purpose tag, ...), so trials can run in any order or in
parallel and still draw identical numbers.
"""
import zlib

import numpy as np

GENERATOR = "numpy.PCG64/SeedSequence"


def _tag(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def stream(seed, *key):
    """Return an independent generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_tag(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
