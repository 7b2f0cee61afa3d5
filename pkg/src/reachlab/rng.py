"""Seed discipline for every stochastic routine in the package.

All randomness flows through counter-based Philox streams keyed by
(seed, path).  Ensemble members get disjoint streams -- run i of a
sweep uses ``stream(seed, i)`` -- so results do not depend on how runs
are scheduled across workers, and identical (config, seed) pairs give
bit-identical output.
"""

import numpy as np

from .errors import ContractError


def stream(seed, *path):
    """Return a fresh ``numpy.random.Generator`` for (seed, *path).

    Parameters
    ----------
    seed : int
        Non-negative base seed, typically from an experiment config.
    *path : int
        Optional sub-stream coordinates (run index, cell index, ...).
        Distinct paths give statistically independent streams.
    """
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ContractError(f"seed must be a non-negative integer, got {seed!r}")
    for c in path:
        if not isinstance(c, (int, np.integer)) or c < 0:
            raise ContractError(f"stream path components must be non-negative ints, got {path!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in path))
    return np.random.Generator(np.random.Philox(ss))
