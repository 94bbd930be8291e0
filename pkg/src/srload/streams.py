"""Deterministic RNG stream derivation.

Every Monte Carlo unit of work (an atom batch, a loading run, a telegraph
trace, one per-ion jump process) draws from its own generator, derived from
the master seed and a stable stream key.  Results are therefore independent
of how work is partitioned among workers: worker k simply executes the units
whose indices fall in its slice.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream_key", "spawn_generator"]


def stream_key(*parts) -> tuple[int, ...]:
    """Map a mixed tuple of str/int parts onto a stable integer spawn key."""
    key = []
    for part in parts:
        if isinstance(part, str):
            key.append(zlib.crc32(part.encode("utf-8")))
        elif isinstance(part, (int, np.integer)):
            key.append(int(part) & 0xFFFFFFFF)
        else:
            raise TypeError(f"stream key parts must be str or int, got {type(part)!r}")
    return tuple(key)


def spawn_generator(master_seed: int, *parts) -> np.random.Generator:
    """A PCG64 generator for the stream identified by ``parts``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=stream_key(*parts))
    return np.random.Generator(np.random.PCG64(ss))
