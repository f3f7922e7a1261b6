"""Deterministic per-trial random sources.

Every Monte Carlo trial owns an independent child generator derived from the
caller's seed or generator, so trials can run in any order (or in parallel)
and still reproduce the sequential results bit for bit.
"""

from __future__ import annotations

import numpy as np


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def spawn_rngs(seed_or_rng, k: int) -> list:
    """k independent child generators, deterministic in the input."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng.spawn(k)
    if isinstance(seed_or_rng, np.random.SeedSequence):
        seqs = seed_or_rng.spawn(k)
    else:
        seqs = np.random.SeedSequence(int(seed_or_rng)).spawn(k)
    return [np.random.default_rng(s) for s in seqs]
