"""Seeded random generator factory"""
import hashlib

import numpy as np


def make_rng(seed: int, *purpose) -> np.random.Generator:
    """
    Derive an independent generator for one purpose

    The same (seed, purpose) pair always yields the same stream, and
    distinct purposes yield statistically independent streams.

    Args:
        seed: Run seed
        purpose: Any number of labels, e.g. ("augment", clip_id)

    Returns:
        numpy Generator
    """
    key = "\x1f".join(str(p) for p in purpose).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + words))
