"""Named random sub-streams derived from one root seed."""

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for stage ``name`` (e.g. "split", "init", "gibbs", "tsne")."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def sub_seed(seed: int, name: str) -> int:
    return int(stream(seed, name).integers(0, 2**31 - 1))
