"""Seed derivation and the counter-based Gaussian noise field.

Every random quantity in the package is derived from a 64-bit master seed.
Independent streams are obtained by hashing ``(seed, index, tag)``, so a
replication's randomness does not depend on scheduling order.

The innovation sequence of the moving-average generators is a *noise field*:
the innovation at integer time ``p`` is a pure function of ``(key, p)``.  This
is what lets ``gen_at_indices`` evaluate the process at sparse sampling times
without generating the gaps, and still agree bit-for-bit with a dense run.
"""
from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
TWO_PI = 2.0 * np.pi
_INV53 = 2.0 ** -53


def derive_seed(seed: int, *parts) -> int:
    """Mix a master seed with integers/strings into an independent 64-bit seed."""
    h = hashlib.blake2b(digest_size=8, person=b"lmsampling")
    h.update(struct.pack("<Q", int(seed) & MASK64))
    for part in parts:
        if isinstance(part, str):
            b = part.encode()
            h.update(b"s" + struct.pack("<I", len(b)) + b)
        else:
            h.update(b"i" + struct.pack("<q", int(part)))
    return struct.unpack("<Q", h.digest())[0]


def generator(seed: int, *parts) -> np.random.Generator:
    """A numpy Generator on the stream ``derive_seed(seed, *parts)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *parts)))


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def noise_field(key: int, positions) -> np.ndarray:
    """Standard normal innovations at integer ``positions`` (pure numpy).

    Two SplitMix64 outputs per position feed a Box-Muller transform (cosine
    branch only).  The compiled kernel implements the same recipe.
    """
    pos = np.asarray(positions, dtype=np.int64)
    k = pos.astype(np.uint64)  # two's-complement wrap for negative times
    key = np.uint64(int(key) & MASK64)
    g = np.uint64(GOLDEN)
    two = np.uint64(2)
    a = _mix64(key + (two * k + np.uint64(1)) * g)
    b = _mix64(key + (two * k + two) * g)
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53
    u2 = (b >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)
