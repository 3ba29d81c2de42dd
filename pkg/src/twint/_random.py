"""Seeded random streams.

Every sampler takes either an integer seed or a ready ``numpy.random.Generator``.
Integer seeds go through ``SeedSequence`` into PCG64, which gives the same
stream on every platform.  Independent sub-streams (simulation replicates,
bootstrap resamples) are keyed as ``SeedSequence([seed, key, ...])``.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 12345


def as_generator(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = DEFAULT_SEED
    if isinstance(seed, (bool, float)) or not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an integer or a numpy Generator")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``."""
    entropy = [int(seed), *(int(k) for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
