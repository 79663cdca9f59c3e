"""Seed handling.

All randomness flows through numpy's PCG64 bit generator. Child streams are
derived with ``SeedSequence`` spawn keys, so a (seed, key path) pair always
names the same stream regardless of how many other streams were drawn.
"""
import numpy as np


def rng(seed, *key):
    """Generator for ``seed`` and an optional integer key path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seeds(seed, n, *key):
    """``n`` independent 63-bit integer seeds derived from ``seed``."""
    return [int(s) for s in rng(seed, *key).integers(0, 2**63 - 1, size=n, dtype=np.int64)]
