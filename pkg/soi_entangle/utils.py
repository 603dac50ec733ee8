"""Utility functions shared by the simulation modules."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .core import InvalidInputError, SweepSpacing

ANGLE_DECIMALS = 6


def normalize_degrees(value: float) -> tuple[float, bool]:
    """Reduce an angle in degrees to [0, 360) at fixed precision.

    Returns the normalized angle and whether the reduction changed the value.
    """
    if not math.isfinite(value):
        raise InvalidInputError(f"angle must be finite, got {value!r}")
    reduced = round(value % 360.0, ANGLE_DECIMALS)
    if reduced >= 360.0:
        reduced = 0.0
    # avoid -0.0 in canonical output
    reduced = reduced + 0.0
    return reduced, not (0.0 <= value < 360.0)


def require_finite(*values: float) -> None:
    """Raise InvalidInputError unless every value is finite."""
    for value in values:
        if not math.isfinite(value):
            raise InvalidInputError(f"expected a finite value, got {value!r}")


def substream(seed: int | np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Derive a child seed sequence addressed by an integer key path.

    The child depends only on the master entropy and the key, never on the
    order in which children are requested.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=(*seed.spawn_key, *key)
        )
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))


def block_generator(
    seed: int | np.random.SeedSequence, key: Sequence[int], block: int
) -> np.random.Generator:
    """Generator for one gate block of the stream addressed by ``key``."""
    return np.random.default_rng(substream(seed, *key, block))


def sweep_values(
    start: float, stop: float, steps: int, spacing: SweepSpacing = SweepSpacing.LINEAR
) -> list[float]:
    """Sweep points from start to stop inclusive."""
    if steps < 2:
        raise InvalidInputError("a sweep needs at least 2 steps")
    match spacing:
        case SweepSpacing.LINEAR:
            values = np.linspace(start, stop, steps)
        case SweepSpacing.LOG:
            if start <= 0 or stop <= 0:
                raise InvalidInputError("log spacing needs positive bounds")
            values = np.geomspace(start, stop, steps)
    return [float(v) for v in values]
