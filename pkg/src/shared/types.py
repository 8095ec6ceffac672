"""Shared type definitions and random-stream helpers used across packages."""

from __future__ import annotations

from typing import Final

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

SEED_BITS: Final = 64


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` under ``seed``.

    Same (seed, index) always yields the same stream, whatever thread or
    order the trial runs in: the index is a spawn key, not a counter shared
    between workers.
    """
    sequence = np.random.SeedSequence(seed % (1 << SEED_BITS), spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(sequence))
