"""Deterministic child-seed derivation for parallel experiments.

Every experiment in this toolkit consumes randomness through
``numpy.random.Generator`` objects derived from a single 64-bit master
seed.  Trial ``i`` of an experiment gets the generator built from
``SeedSequence(master_seed, spawn_key=(i,))``; nested streams extend the
spawn key (e.g. ``(i, 1)`` for a trial's noise stream).  The scheme is
splittable and stateless: adding trials never perturbs earlier ones, and
independent workers can rebuild any trial's stream from ``(seed, path)``
alone.
"""

from __future__ import annotations

import numpy as np

__all__ = ["child_rng", "as_rng"]


def child_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for stream ``path`` under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(seq)


def as_rng(rng_or_seed) -> np.random.Generator:
    """Coerce an int seed or an existing Generator into a Generator."""
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(int(rng_or_seed))
