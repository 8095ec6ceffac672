"""Monte Carlo engine for the typical SC triple of a cache-aided FD network.

A trial realises the interfering SCs (PPP in a disc window around the
origin) with their UL/DL marks and cache-miss flags, then evaluates the
SIR at the typical SC and at its DL node.  Estimators count successes
over ``config.trials`` trials.

Trial ``t`` always draws from ``trial_rng(config.seed, t)``.  Blocks of
trials run on a thread pool, per-trial outcomes are gathered in trial
order, so estimates are bit-identical for any ``workers`` value.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from typing import Final

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from shared.errors import InvalidArgumentError
from shared.types import FloatArray, trial_rng

from .analytics import CacheModel, cache_free_hd_success, cache_hit_probability
from .catalog import FileCatalog
from .channel import (
    LinkKind,
    NetworkParams,
    NodeRole,
    UplinkLaw,
    link_kind,
    pathloss,
    pathloss_squared,
    sample_rayleigh_power,
    sample_si_power,
)
from .geometry import (
    ORIGIN,
    MarkedTriple,
    MarkedTriples,
    Point2D,
    TiledFileField,
    attach_marks,
    count_in_ball,
    sample_file_field,
    sample_ppp_disc,
    typical_triple,
)

log = structlog.get_logger(__name__)

Z_95: Final = 1.959963984540054
DEFAULT_WINDOW: Final = 2000.0
_WINDOW_FACTOR: Final = 10.0

FadingSampler = Callable[[np.random.Generator, int], FloatArray]


def rayleigh_fades(rng: np.random.Generator, count: int) -> FloatArray:
    return sample_rayleigh_power(rng, count)


def unit_fades(_rng: np.random.Generator, count: int) -> FloatArray:
    """Deterministic h = 1 on every link, for forced-geometry checks."""
    return np.ones(count)


class CorrelationMode(StrEnum):
    """Whether the UL and DL hops of a miss share one interferer realisation."""

    CORRELATED = "correlated"
    UNCORRELATED = "uncorrelated"


class CacheMode(StrEnum):
    """How interferer cache states are drawn."""

    THINNED = "thinned"
    GEOGRAPHIC = "geographic"


class HitMode(StrEnum):
    """File fields behind the request and cache balls in ``estimate_cache_hit``."""

    INDEPENDENT = "independent"
    SHARED = "shared"


class Receiver(StrEnum):
    """Receiver whose aggregate interference ``estimate_laplace`` averages."""

    DL_HIT = "dl_hit"
    DL_MISS = "dl_miss"
    SC = "sc"


def _default_catalog() -> FileCatalog:
    return FileCatalog(size=100)


def _default_cache() -> CacheModel:
    return CacheModel(storage=35, catalog_size=100)


class SimConfig(BaseModel):
    """Everything one estimator run depends on."""

    model_config = ConfigDict(frozen=True)

    params: NetworkParams = Field(default_factory=NetworkParams)
    catalog: FileCatalog = Field(default_factory=_default_catalog)
    cache: CacheModel = Field(default_factory=_default_cache)
    theta: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    trials: int = Field(default=10_000, ge=1)
    window_radius: float = Field(default=DEFAULT_WINDOW, gt=0.0, allow_inf_nan=False)
    mode: CorrelationMode = CorrelationMode.CORRELATED
    cache_mode: CacheMode = CacheMode.THINNED
    hit_mode: HitMode = HitMode.INDEPENDENT
    sc_uplink: UplinkLaw = UplinkLaw.PHYSICAL
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> SimConfig:
        extent = _WINDOW_FACTOR * max(self.params.r_ul, self.params.r_dl)
        if self.window_radius < extent:
            raise ValueError(
                f"window radius {self.window_radius} m is below 10·max(R_UL, R_DL) = {extent} m"
            )
        if self.cache.catalog_size != self.catalog.size:
            raise ValueError(
                f"cache built for {self.cache.catalog_size} files, catalog has {self.catalog.size}"
            )
        return self


@dataclass(frozen=True, slots=True)
class EstimateWithCI:
    """Empirical mean with a 95% normal-approximation half width."""

    mean: float
    half_width_95: float
    trials: int

    @classmethod
    def from_bernoulli(cls, successes: int, trials: int) -> EstimateWithCI:
        if trials < 1:
            raise InvalidArgumentError(f"need at least one trial, got {trials}")
        mean = successes / trials
        return cls(mean, Z_95 * math.sqrt(mean * (1.0 - mean) / trials), trials)

    @classmethod
    def from_samples(cls, values: FloatArray) -> EstimateWithCI:
        count = int(values.shape[0])
        if count < 1:
            raise InvalidArgumentError("need at least one sample")
        mean = math.fsum(values) / count
        spread = float(np.std(values, ddof=1)) if count > 1 else 0.0
        return cls(mean, Z_95 * spread / math.sqrt(count), count)

    def scaled(self, factor: float) -> EstimateWithCI:
        return EstimateWithCI(self.mean * factor, self.half_width_95 * abs(factor), self.trials)

    def covers(self, value: float, widths: float = 1.0) -> bool:
        return abs(self.mean - value) <= widths * self.half_width_95


@dataclass(frozen=True, slots=True)
class NetworkRealization:
    """Typical triple at the origin plus interfering triples and their miss flags.

    ``typical_miss`` is only set in geographic cache mode, where the
    typical cell's cache state follows from the same file field.
    """

    typical: MarkedTriple
    interferers: MarkedTriples
    cache_miss: np.ndarray
    window_radius: float
    typical_miss: bool | None = None

    def __len__(self) -> int:
        return len(self.interferers)

    @property
    def miss_fraction(self) -> float:
        return float(np.mean(self.cache_miss)) if len(self) else 0.0


# ---------------------------------------------------------------------------
# Cache states
# ---------------------------------------------------------------------------


def _geographic_miss(
    field: TiledFileField, cache: CacheModel, sc: Point2D, dl: Point2D, rng: np.random.Generator
) -> bool:
    """Definition-2 cache state of one cell on a shared file field."""
    index = int(rng.integers(1, cache.catalog_size + 1))
    if index > cache.storage:
        return True
    hit = field.contains(dl, cache.request_radius, index) and field.contains(
        sc, cache.cache_radius, index
    )
    return not hit


def _tile_side(cache: CacheModel) -> float:
    return max(2.0 * cache.cache_radius, 2.0 * cache.request_radius, 1.0)


def realize_network(
    config: SimConfig, p_hit: float, rng: np.random.Generator
) -> NetworkRealization:
    """Typical triple at the origin and PPP(λ) interferers with cache-miss flags.

    Thinned mode flags each interferer independently with probability
    1 − ``p_hit``; geographic mode evaluates every cell on one lazily
    sampled file field.
    """
    if not 0.0 <= p_hit <= 1.0:
        raise InvalidArgumentError(f"p_hit must lie in [0, 1], got {p_hit!r}")
    params = config.params
    typical = typical_triple(params.r_ul, params.r_dl, rng)
    sc = sample_ppp_disc(params.sc_density, config.window_radius, rng)
    interferers = attach_marks(sc, params.r_ul, params.r_dl, rng)

    if config.cache_mode is CacheMode.THINNED:
        flags = rng.random(len(interferers)) >= p_hit
        return NetworkRealization(typical, interferers, flags, config.window_radius)

    field = TiledFileField(config.catalog, rng, _tile_side(config.cache))
    flags = np.fromiter(
        (_geographic_miss(field, config.cache, t.sc, t.dl, rng) for t in interferers),
        dtype=bool,
        count=len(interferers),
    )
    typical_miss = _geographic_miss(field, config.cache, typical.sc, typical.dl, rng)
    return NetworkRealization(typical, interferers, flags, config.window_radius, typical_miss)


# ---------------------------------------------------------------------------
# Interference and SIR
# ---------------------------------------------------------------------------


def _received(
    power: float,
    sources: FloatArray,
    receiver: Point2D,
    kind: LinkKind,
    params: NetworkParams,
    rng: np.random.Generator,
    fading: FadingSampler,
) -> float:
    if sources.shape[0] == 0:
        return 0.0
    offsets = sources - receiver.as_array()
    d2 = np.einsum("ij,ij->i", offsets, offsets)
    gains = pathloss_squared(kind, d2, params)
    return power * float(gains @ fading(rng, gains.shape[0]))


def interference_at_sc(
    net: NetworkRealization,
    params: NetworkParams,
    rng: np.random.Generator,
    *,
    uplink: UplinkLaw = UplinkLaw.PHYSICAL,
    fading: FadingSampler = rayleigh_fades,
    self_interference: bool = True,
) -> float:
    """Aggregate interference at the typical SC: SC interferers, active UL nodes, own SI."""
    x = net.typical.sc
    sc_link = link_kind(NodeRole.SC, NodeRole.SC)
    total = _received(params.rho_dl, net.interferers.sc, x, sc_link, params, rng, fading)
    active_ul = net.interferers.ul[net.cache_miss]
    total += _received(params.rho_ul, active_ul, x, uplink.interferer_link(), params, rng, fading)
    if self_interference and params.b > 0:
        total += params.rho_dl * sample_si_power(params, rng)
    return total


def interference_at_dl(
    net: NetworkRealization,
    typical_miss: bool,
    params: NetworkParams,
    rng: np.random.Generator,
    *,
    fading: FadingSampler = rayleigh_fades,
) -> float:
    """Aggregate interference at d(x): SC interferers, active UL nodes, and u(x) on a miss."""
    d = net.typical.dl
    sc_link = link_kind(NodeRole.SC, NodeRole.DL)
    ul_link = link_kind(NodeRole.UL, NodeRole.DL)
    total = _received(params.rho_dl, net.interferers.sc, d, sc_link, params, rng, fading)
    active_ul = net.interferers.ul[net.cache_miss]
    total += _received(params.rho_ul, active_ul, d, ul_link, params, rng, fading)
    if typical_miss:
        own_ul = net.typical.ul.as_array().reshape(1, 2)
        total += _received(params.rho_ul, own_ul, d, ul_link, params, rng, fading)
    return total


def _ratio(signal: float, interference: float) -> float:
    return math.inf if interference == 0 else signal / interference


def sir_at_typical_sc(
    net: NetworkRealization,
    typical_miss: bool,
    params: NetworkParams,
    rng: np.random.Generator,
    *,
    uplink: UplinkLaw = UplinkLaw.PHYSICAL,
    fading: FadingSampler = rayleigh_fades,
) -> float:
    """SIR of the UL→SC backhaul hop; only defined on a cache miss.

    Infinite when nothing interferes (no interferers and b = 0).
    """
    if not typical_miss:
        raise InvalidArgumentError("the UL hop is idle on a cache hit; its SIR is undefined")
    distance = net.typical.sc.distance_to(net.typical.ul)
    signal = (
        params.rho_ul
        * pathloss(link_kind(NodeRole.UL, NodeRole.SC), distance, params)
        * float(fading(rng, 1)[0])
    )
    return _ratio(signal, interference_at_sc(net, params, rng, uplink=uplink, fading=fading))


def sir_at_typical_dl(
    net: NetworkRealization,
    typical_miss: bool,
    params: NetworkParams,
    rng: np.random.Generator,
    *,
    fading: FadingSampler = rayleigh_fades,
) -> float:
    """SIR of the SC→DL access hop at d(x)."""
    distance = net.typical.sc.distance_to(net.typical.dl)
    signal = (
        params.rho_dl
        * pathloss(link_kind(NodeRole.SC, NodeRole.DL), distance, params)
        * float(fading(rng, 1)[0])
    )
    return _ratio(signal, interference_at_dl(net, typical_miss, params, rng, fading=fading))


# ---------------------------------------------------------------------------
# Trial runner
# ---------------------------------------------------------------------------


def _blocks(trials: int, workers: int) -> list[range]:
    size = math.ceil(trials / workers)
    return [range(start, min(start + size, trials)) for start in range(0, trials, size)]


def _run_trials(
    config: SimConfig, trial: Callable[[np.random.Generator], float], label: str
) -> FloatArray:
    """Per-trial outcomes in trial order, computed over ``config.workers`` threads."""
    started = time.perf_counter()

    def run_block(block: range) -> FloatArray:
        values = np.fromiter(
            (trial(trial_rng(config.seed, t)) for t in block), dtype=np.float64, count=len(block)
        )
        log.debug("sim_block_done", estimator=label, start=block.start, stop=block.stop)
        return values

    blocks = _blocks(config.trials, config.workers)
    if config.workers == 1:
        outcomes = run_block(blocks[0])
    else:
        with ThreadPoolExecutor(
            max_workers=config.workers, thread_name_prefix="fdcache-trials"
        ) as pool:
            outcomes = np.concatenate(list(pool.map(run_block, blocks)))
    log.debug(
        "sim_trials_done",
        elapsed_s=round(time.perf_counter() - started, 3),
        estimator=label,
        trials=config.trials,
        workers=config.workers,
    )
    return outcomes


def _bernoulli_estimate(
    config: SimConfig, trial: Callable[[np.random.Generator], bool], label: str
) -> EstimateWithCI:
    outcomes = _run_trials(config, lambda rng: float(trial(rng)), label)
    estimate = EstimateWithCI.from_bernoulli(int(np.count_nonzero(outcomes)), config.trials)
    log.info(
        "sim_estimate",
        mean=estimate.mean,
        ci95=estimate.half_width_95,
        trials=estimate.trials,
        estimator=label,
        mode=config.mode.value,
    )
    return estimate


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _file_present(
    catalog: FileCatalog, center: Point2D, radius: float, index: int, rng: np.random.Generator
) -> bool:
    if radius <= 0:
        return False
    field = sample_file_field(catalog, center, radius, rng, files=[index])
    return count_in_ball(field, center, radius, index) > 0


def estimate_cache_hit(config: SimConfig) -> EstimateWithCI:
    """Empirical cache hit probability of the typical cell.

    The requested index is uniform on the catalog; a hit needs the index
    within storage and a file of that index in both the request ball
    around d(x) and the cache ball around x.  ``HitMode.INDEPENDENT``
    samples the two balls from independent fields; ``HitMode.SHARED``
    uses one field, so overlapping balls share points.
    """
    cache = config.cache
    catalog = config.catalog
    params = config.params

    def trial(rng: np.random.Generator) -> bool:
        index = int(rng.integers(1, catalog.size + 1))
        triple = typical_triple(params.r_ul, params.r_dl, rng)
        if index > cache.storage or cache.request_radius <= 0 or cache.cache_radius <= 0:
            return False
        if config.hit_mode is HitMode.INDEPENDENT:
            return _file_present(
                catalog, triple.dl, cache.request_radius, index, rng
            ) and _file_present(catalog, triple.sc, cache.cache_radius, index, rng)
        window = max(cache.cache_radius, params.r_dl + cache.request_radius)
        field = sample_file_field(catalog, ORIGIN, window, rng, files=[index])
        return (
            count_in_ball(field, triple.dl, cache.request_radius, index) > 0
            and count_in_ball(field, triple.sc, cache.cache_radius, index) > 0
        )

    return _bernoulli_estimate(config, trial, "cache_hit")


def _success_trial(
    config: SimConfig, p_hit: float, fading: FadingSampler
) -> Callable[[np.random.Generator], bool]:
    params = config.params
    theta = config.theta

    def trial(rng: np.random.Generator) -> bool:
        miss_draw = rng.random() >= p_hit
        net = realize_network(config, p_hit, rng)
        typical_miss = miss_draw if net.typical_miss is None else net.typical_miss
        if sir_at_typical_dl(net, typical_miss, params, rng, fading=fading) <= theta:
            return False
        if not typical_miss:
            return True
        if config.mode is CorrelationMode.UNCORRELATED:
            fresh = realize_network(config, p_hit, rng)
            net = dataclasses.replace(fresh, typical=net.typical)
        sir = sir_at_typical_sc(net, True, params, rng, uplink=config.sc_uplink, fading=fading)
        return sir > theta

    return trial


def estimate_success(
    config: SimConfig,
    *,
    p_hit: float | None = None,
    fading: FadingSampler = rayleigh_fades,
) -> EstimateWithCI:
    """Empirical end-to-end success probability at threshold ``config.theta``.

    A hit needs SIR_d(x) > θ; a miss needs SIR_x > θ as well.  In
    correlated mode both hops of a miss see the same interferers and flags
    with fresh fades; in uncorrelated mode the SC hop gets an independently
    redrawn network.  ``p_hit`` defaults to the closed-form hit probability.
    """
    if p_hit is None:
        p_hit = cache_hit_probability(config.catalog, config.cache)
    return _bernoulli_estimate(config, _success_trial(config, p_hit, fading), "success")


def estimate_throughput_gain(config: SimConfig, *, p_hit: float | None = None) -> EstimateWithCI:
    """FD throughput gain from the simulated success probability; CI scaled alike."""
    success = estimate_success(config, p_hit=p_hit)
    return success.scaled(2.0 / cache_free_hd_success(config.theta, config.params))


def estimate_area_spectral_efficiency(
    config: SimConfig, *, p_hit: float | None = None
) -> EstimateWithCI:
    """λ·P̂_suc·log₂(1 + θ) with the CI of P̂_suc scaled alike."""
    success = estimate_success(config, p_hit=p_hit)
    return success.scaled(config.params.sc_density * math.log2(1.0 + config.theta))


def estimate_laplace(
    s: float,
    config: SimConfig,
    receiver: Receiver = Receiver.DL_HIT,
    *,
    p_hit: float | None = None,
) -> EstimateWithCI:
    """Shot-noise estimate of E[exp(−s·I)] at the chosen receiver.

    DL_HIT: interference at d(x) with the typical UL idle.  DL_MISS: the
    typical UL node active as well.  SC: interference at x including SI,
    UL interferers at the exponent of ``config.sc_uplink``.
    """
    if not s >= 0:
        raise InvalidArgumentError(f"Laplace variable must be >= 0, got {s!r}")
    if p_hit is None:
        p_hit = cache_hit_probability(config.catalog, config.cache)
    params = config.params

    def trial(rng: np.random.Generator) -> float:
        net = realize_network(config, p_hit, rng)
        if receiver is Receiver.SC:
            interference = interference_at_sc(net, params, rng, uplink=config.sc_uplink)
        else:
            interference = interference_at_dl(net, receiver is Receiver.DL_MISS, params, rng)
        return math.exp(-s * interference)

    estimate = EstimateWithCI.from_samples(_run_trials(config, trial, f"laplace_{receiver}"))
    log.info(
        "sim_estimate",
        mean=estimate.mean,
        ci95=estimate.half_width_95,
        trials=estimate.trials,
        estimator="laplace",
        receiver=receiver.value,
        s=s,
    )
    return estimate
