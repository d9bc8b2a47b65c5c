"""Named, independent random streams derived from one root seed."""

from __future__ import annotations

import hashlib

import numpy as np


def stable_hash(*parts: object) -> int:
    """64-bit hash of ``parts`` that is stable across processes and Python versions."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def stream(seed: int, *names: object) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and a path of names.

    Different name paths give statistically independent streams.
    """
    key = stable_hash(seed, *names)
    return np.random.Generator(np.random.Philox(key=key))
