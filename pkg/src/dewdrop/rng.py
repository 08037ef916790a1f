"""Seeded random-number streams.

Every stochastic operation takes a ``numpy.random.Generator``. Independent
streams (one per image, per chain, per trial) derive from a root seed by
the splitting rule ``stream(seed, *indices) = PCG64(SeedSequence([seed, *indices]))``,
so results are reproducible from the root seed alone and do not depend on
the order in which streams are consumed.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_rng(seed: int, *indices: int) -> np.random.Generator:
    """Derive the independent stream for (seed, index path)."""
    entropy = [int(seed), *(int(i) for i in indices)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
