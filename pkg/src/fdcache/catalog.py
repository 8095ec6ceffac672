"""Global file catalog with Zipf popularity and per-file spatial intensities.

Files are indexed by popularity (1 = most popular).  The catalog is the
only place popularity is computed; analytics, the simulator and the CLI
read ``FileCatalog.popularity`` instead of re-deriving it.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from shared.errors import InvalidArgumentError
from shared.types import FloatArray, IntArray


def zipf_popularity(size: int, gamma: float) -> FloatArray:
    """Zipf popularity vector p_i = (i^γ · Σ_j j^{-γ})^{-1}, i = 1..size.

    The normalization sum uses ``math.fsum`` (exactly rounded), so the vector
    sums to one within 1e-12 even for catalogs of 10⁷ files.
    """
    if isinstance(size, bool) or not isinstance(size, int | np.integer) or size < 1:
        raise InvalidArgumentError(f"catalog size must be a positive integer, got {size!r}")
    if not math.isfinite(gamma) or gamma < 0:
        raise InvalidArgumentError(f"Zipf shape must be finite and >= 0, got {gamma!r}")
    if gamma == 0:
        return np.full(int(size), 1.0 / size)
    weights = np.arange(1, int(size) + 1, dtype=np.float64) ** -gamma
    return weights / math.fsum(weights)


@lru_cache(maxsize=32)
def _frozen_popularity(size: int, gamma: float) -> FloatArray:
    popularity = zipf_popularity(size, gamma)
    popularity.setflags(write=False)
    return popularity


class FileCatalog(BaseModel):
    """Catalog of ``size`` files, Zipf(``gamma``) popularity, field density ``eta``.

    ``eta`` is the spatial density of the file field Ψ in files/m²; file i
    alone forms a thinned PPP of density p_i·η.
    """

    model_config = ConfigDict(frozen=True)

    size: int = Field(ge=1)
    gamma: float = Field(default=0.7, ge=0.0, allow_inf_nan=False)
    eta: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)

    @field_validator("size", mode="before")
    @classmethod
    def _reject_bool(cls, value: object) -> object:
        if isinstance(value, bool):
            raise ValueError("size must be an integer")
        return value

    @property
    def popularity(self) -> FloatArray:
        """Read-only popularity vector; entry ``i - 1`` is p_i."""
        return _frozen_popularity(self.size, self.gamma)

    def probability(self, index: int) -> float:
        self._check_index(index)
        return float(self.popularity[index - 1])

    def intensities(self) -> FloatArray:
        """Per-file densities p_i·η for every file."""
        return self.popularity * self.eta

    def sample_requests(self, rng: np.random.Generator, count: int) -> IntArray:
        """Draw ``count`` 1-based file indices with the popularity law."""
        return rng.choice(self.size, size=count, p=self.popularity).astype(np.int64) + 1

    def _check_index(self, index: int) -> None:
        if not 1 <= index <= self.size:
            raise InvalidArgumentError(f"file index {index} outside [1, {self.size}]")


def file_intensity(catalog: FileCatalog, index: int) -> float:
    """Spatial density p_i·η of file ``index`` (1-based), in files/m²."""
    return catalog.probability(index) * catalog.eta
