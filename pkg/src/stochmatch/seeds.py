"""Deterministic RNG streams derived from one master seed.

Every random quantity in the package flows from a single integer seed
through named substreams, so results are reproducible and independent of
how work is scheduled across threads or processes.
"""

from __future__ import annotations

import functools
import hashlib

import numpy as np

__all__ = ["stream_entropy", "derived_rng"]


@functools.lru_cache(maxsize=256)
def _hash_str_tag(tag: str) -> int:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _tag_to_int(tag: str | int) -> int:
    if isinstance(tag, int):
        return tag
    return _hash_str_tag(tag)


def stream_entropy(seed: int, *tags: str | int) -> list[int]:
    """Entropy list for ``np.random.SeedSequence``, stable across runs."""
    return [int(seed)] + [_tag_to_int(t) for t in tags]


def derived_rng(seed: int, *tags: str | int) -> np.random.Generator:
    """A fresh PCG64 generator for the substream named by ``tags``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(stream_entropy(seed, *tags))))
