"""Seeded random streams.

Every random object in a run draws from its own PCG64 stream, derived from the
run seed with ``numpy.random.SeedSequence(seed, spawn_key=(domain, index))``.
Streams are therefore independent of one another and of the order in which
they are requested.  ``seed=None`` takes fresh entropy from the OS.
"""

from __future__ import annotations

import secrets

import numpy as np

FILES = 0
ENCRYPTION = 1
KEYS = 2


def stream(seed: int | None, domain: int, index: int) -> np.random.Generator:
    if seed is None:
        seed = secrets.randbits(128)
    ss = np.random.SeedSequence(int(seed), spawn_key=(domain, index))
    return np.random.Generator(np.random.PCG64(ss))


def symbols(rng: np.random.Generator, m: int, shape) -> np.ndarray:
    return rng.integers(0, 1 << m, size=shape, dtype=np.uint32)
