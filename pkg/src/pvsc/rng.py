"""Reproducible random substreams.

Every random draw in a sweep is taken from a generator keyed by
``(seed, frame_index, stream_tag)`` so that sweep points and frames can be
evaluated in any order (or in parallel) and still produce identical samples.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_word(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8")) & 0xFFFFFFFF


def substream(seed: int, frame_index: int = 0, tag: str = "") -> np.random.Generator:
    """Return an independent generator for one (seed, frame, purpose) triple."""
    if seed < 0 or frame_index < 0:
        raise ValueError("seed and frame_index must be non-negative")
    ss = np.random.SeedSequence([int(seed), int(frame_index), _tag_word(tag)])
    return np.random.Generator(np.random.PCG64(ss))
