"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(master seed, purpose tag, index...)``
so replication ``i`` of an experiment draws the same numbers no matter which
worker runs it or in what order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "tag_key"]


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str = "default", *index: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    key = (tag_key(tag), *(int(i) for i in index))
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
