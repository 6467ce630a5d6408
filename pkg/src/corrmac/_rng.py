"""Seeded random streams.

Every stochastic routine takes an explicit integer seed. Streams are built on
the counter-based Philox bit generator, keyed by a tuple of integers so that
independent sub-streams (per block, per probe) can be derived without sharing
state.
"""

import numpy as np


def make_rng(*keys: int) -> np.random.Generator:
    if not keys:
        raise ValueError("at least one seed key is required")
    if any(int(k) < 0 for k in keys):
        raise ValueError(f"seed keys must be non-negative, got {keys}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in keys])))
