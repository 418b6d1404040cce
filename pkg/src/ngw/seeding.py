"""Deterministic seed derivation for nested experiment runs."""

from __future__ import annotations

import zlib

import numpy as np


def _as_int(component) -> int:
    if isinstance(component, (int, np.integer)):
        return int(component)
    if isinstance(component, str):
        return zlib.crc32(component.encode("utf-8"))
    raise TypeError(f"seed components must be int or str, got {type(component)}")


def derive_seed(*components) -> int:
    """Map a tuple of ints/strings to a stable 32-bit seed.

    The mapping is pure, so two runs that derive seeds along the same
    component paths draw identical random streams.
    """
    entropy = [_as_int(c) for c in components]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint32)[0])


def rng_from(*components) -> np.random.Generator:
    """Generator seeded by derive_seed over the same components."""
    return np.random.default_rng(derive_seed(*components))
