"""Deterministic random streams derived from a seed and integer keys."""

import numpy as np


def substream(seed, *keys):
    """Generator for the stream keyed by ``(seed, *keys)``; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def generator(seed):
    return np.random.default_rng(np.random.SeedSequence(int(seed)))
