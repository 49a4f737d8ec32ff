"""Deterministic derivation of named random sub-streams.

Every source of randomness in the package is a named child of one master
seed, so individual components (data, init, augmentation, simulation) can
be varied independently and results never depend on thread count or call
order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_to_int(tag: object) -> int:
    digest = hashlib.sha256(repr(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *tags: object) -> np.random.Generator:
    """Generator keyed by (seed, *tags); stable across runs and platforms."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
