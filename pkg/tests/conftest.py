"""Shared fixtures: the reference network and fixed random streams."""

from __future__ import annotations

import os

import numpy as np
import pytest

os.environ.setdefault("FDCACHE_LOG_LEVEL", "WARNING")

from fdcache.analytics import CacheModel  # noqa: E402
from fdcache.catalog import FileCatalog  # noqa: E402
from fdcache.channel import NetworkParams  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def reference_params() -> NetworkParams:
    """λ = 1e-4, R_UL = 20, R_DL = 5, ρ_UL = 1, ρ_DL = 0.2, α = (3, 4), K = 1, 80 dB."""
    return NetworkParams()


@pytest.fixture
def reference_catalog() -> FileCatalog:
    return FileCatalog(size=100, gamma=0.7, eta=1.0)


@pytest.fixture
def reference_cache() -> CacheModel:
    return CacheModel.from_kappa(0.35, 100)
