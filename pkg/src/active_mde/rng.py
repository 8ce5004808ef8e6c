"""Named, counter-based random streams derived from a single master seed.

Every consumer asks for ``stream(seed, "planner", j, k)`` instead of sharing a
generator, so adding draws in one place never shifts the numbers seen
elsewhere. The derivation is ``SeedSequence(entropy=seed, spawn_key=keys)``
where each key is the CRC32 of the string form of a name component.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part: object) -> int:
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *names: object) -> np.random.Generator:
    """Return an independent generator for ``(seed, *names)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(n) for n in names))
    return np.random.default_rng(ss)


def child_seed(seed: int, *names: object) -> int:
    """A 63-bit integer seed for ``(seed, *names)``, for APIs that take ints."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(n) for n in names))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & (2**63 - 1)
