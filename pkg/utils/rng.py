"""
Named random streams.

Every consumer of randomness asks for a stream identified by
(root seed, purpose tag, integer keys...). Streams with distinct identifiers are
independent, and the same identifier always replays the same draws.
"""

import zlib

import numpy as np


def _spawn_key(tag: str, keys: tuple[int, ...]) -> tuple[int, ...]:
    return (zlib.crc32(tag.encode("utf-8")), *(int(k) for k in keys))


def rng_stream(root_seed: int, tag: str, *keys: int) -> np.random.Generator:
    """Return a generator for the stream (root_seed, tag, *keys)."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=_spawn_key(tag, keys))
    return np.random.default_rng(seq)


def derive_seed(root_seed: int, tag: str, *keys: int) -> int:
    """Collapse a stream identifier into a fresh 63-bit root seed."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=_spawn_key(tag, keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
