"""Deterministic random substreams keyed by tuples of labels."""

import hashlib

import numpy as np


def hash64(*keys):
    """Stable 64-bit hash of a sequence of ints/strings."""
    h = hashlib.blake2b(digest_size=8)
    for key in keys:
        h.update(repr(key).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def substream(*keys):
    """Return an independent ``numpy.random.Generator`` for ``keys``.

    The same keys always produce the same stream, independent of how many
    other streams were created before it.
    """
    return np.random.default_rng(hash64(*keys))


def as_generator(rng):
    """Coerce ``None``/int/Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
