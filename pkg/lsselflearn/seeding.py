"""Deterministic random stream splitting."""

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Map (master seed, purpose tags, indices...) to an independent 31-bit seed."""
    key = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]
    return int(digest, 16) & 0x7FFFFFFF


def rng_for(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
