"""Seeded random streams.

Every random draw in the package goes through :func:`make_rng` with a key of
non-negative integers. The key is hashed by :class:`numpy.random.SeedSequence`
and fed to the counter-based Philox generator, so stream ``(seed, t)`` gives
the same numbers regardless of which other streams were drawn before it.
"""

import numpy as np

from .errors import ArgumentError

# fixed stream tags so the parts of one trial never share a stream
STREAM_TRUTH = 1
STREAM_MASKS = 2
STREAM_NOISE = 3
STREAM_SOLVER = 4


def make_rng(seed, *stream):
    """Generator for the stream addressed by ``(seed, *stream)``."""
    key = [seed, *stream]
    for k in key:
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
            raise ArgumentError(f"seed/stream keys must be non-negative integers, got {k!r}")
        if k >= 2**64:
            raise ArgumentError(f"seed/stream keys must fit in 64 bits, got {k}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))
