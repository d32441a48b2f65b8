"""Deterministic, splittable random streams.

Every stochastic routine in the package derives its generator from an integer
seed plus an index path, so draw i of an ensemble produces identical numbers
no matter the batch size, execution order, or worker count.
"""

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return a generator keyed by ``(seed, *path)``.

    Distinct paths give statistically independent streams; the same
    ``(seed, path)`` always reproduces the same stream.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ValueError(f"stream path must be non-negative, got {path}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.default_rng(ss)
