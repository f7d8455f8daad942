# rng.py
"""Named, seedable random streams.

Every stream is a numpy ``Generator`` over the PCG64 bit generator, keyed by
``(seed, name)`` through ``SeedSequence``. Only ``Generator.random`` (53-bit
uniform doubles straight from the bit stream) is consumed; Gaussians come
from the Box-Muller transform below, so sequences do not depend on numpy's
sampler implementations.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GRID = 2.0 ** 52


def name_key(name: str) -> int:
    """Stable 64-bit key for a stream name (utterance ids, sub-stream labels)."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, *names: str) -> np.random.Generator:
    keys = [name_key(n) for n in names]
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=keys)
    return np.random.Generator(np.random.PCG64(seq))


def uniform_open(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms in the open interval (0, 1): cell midpoints of a 2**-52 grid."""
    return (np.floor(gen.random(size) * _GRID) + 0.5) / _GRID


def gaussian(gen: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal draws via Box-Muller; consumes 2*ceil(size/2) uniforms."""
    pairs = (size + 1) // 2
    u1 = uniform_open(gen, pairs)
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:size]
