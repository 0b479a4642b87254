"""Deterministic random-number plumbing.

Every stochastic component in the package draws from a numpy Generator backed
by the Philox bit generator (64-bit, counter-based, versioned by numpy).
Gaussian draws use Generator.standard_normal (ziggurat).

Stream splitting rule: a run identified by (master_seed, *key) gets the
generator built from SeedSequence(entropy=(master_seed, *key)).  Parallel
sweep cells therefore get reproducible, non-overlapping streams regardless of
scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "spawn_rng", "uniform_sphere"]


def make_rng(seed: int) -> np.random.Generator:
    """Generator for a single master seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for a sub-stream addressed by integers (cell, seed, ...)."""
    entropy = (int(master_seed),) + tuple(int(k) for k in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def uniform_sphere(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform point on the unit sphere in R^dim."""
    while True:
        x = rng.standard_normal(dim)
        n = np.linalg.norm(x)
        if n > 0:
            return x / n
