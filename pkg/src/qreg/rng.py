"""Deterministic seed derivation and generator construction.

Every stochastic component in qreg draws from a numpy ``Generator`` backed by
``PCG64`` and seeded through :func:`child_seed`, so any result is a pure
function of one user-facing 64-bit seed plus a derivation path of small
integers (read index, epoch, cell coordinates, ...).  The mixing function is
the splitmix64 finalizer, chosen because it is trivially portable (the
simulated-annealing kernel re-implements the same stream in compiled code)
and has full avalanche, so adjacent paths give unrelated streams.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer: bijective 64-bit mix with full avalanche."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def child_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed from ``seed`` and a path of indices.

    ``child_seed(s)`` differs from ``s`` itself, and distinct paths of any
    length yield (with overwhelming probability) distinct streams.
    """
    s = mix64((seed ^ _GOLDEN) & _MASK64)
    for p in path:
        s = mix64((s + _GOLDEN * (p + 1)) & _MASK64)
    return s


def make_generator(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the stream identified by ``(seed, *path)``.

    Uniforms come from ``Generator.random`` (53-bit) and normals from
    ``Generator.standard_normal`` (ziggurat); both are consumed sequentially
    from the PCG64 stream, so drawing in chunks of any size reproduces the
    same values bit for bit.
    """
    return np.random.Generator(np.random.PCG64(child_seed(seed, *path)))


def splitmix_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 stream; returns (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    return state, mix64(state)
