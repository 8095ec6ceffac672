"""Full-size agreement between the closed forms and the simulator.

Run with ``pytest -m slow``.  Each grid point uses 10^5 trials.  The
uncorrelated grid must sit inside the 95% interval of the bound; the
doubled-window run is checked at 1.5 half widths (about three standard errors).
"""

from __future__ import annotations

import math

import pytest
import structlog

from fdcache.analytics import (
    CacheModel,
    cache_hit_probability,
    dl_operating_point,
    sc_operating_point,
    success_probability_lb,
    throughput_gain,
)
from fdcache.catalog import FileCatalog
from fdcache.channel import NetworkParams, UplinkLaw
from fdcache.config import settings
from fdcache.geometry import window_truncation_bias
from fdcache.simulator import (
    CorrelationMode,
    EstimateWithCI,
    HitMode,
    SimConfig,
    estimate_cache_hit,
    estimate_success,
)

pytestmark = pytest.mark.slow

log = structlog.get_logger(__name__)

TRIALS = 100_000
WIDTHS = 1.5
THREE_SIGMA = 3.0 / 1.959963984540054


def _success_config(
    density: float, kappa: float, mode: CorrelationMode, window: float = 2000.0
) -> SimConfig:
    return SimConfig(
        params=NetworkParams(sc_density=density),
        catalog=FileCatalog(size=100, gamma=0.7, eta=1.0),
        cache=CacheModel.from_kappa(kappa, 100),
        theta=1.0,
        trials=TRIALS,
        window_radius=window,
        mode=mode,
        sc_uplink=UplinkLaw.PRINTED,
        seed=2024,
        workers=settings.workers,
    )


def _bound(config: SimConfig) -> float:
    p_hit = cache_hit_probability(config.catalog, config.cache)
    return success_probability_lb(config.theta, p_hit, config.params, sc_uplink=config.sc_uplink)


def _window_shift_bound(config: SimConfig, estimate: EstimateWithCI) -> float:
    """Largest change in P_suc from extending the window to twice its radius.

    Interferers in the added annulus are independent of those inside, so
    each hop's success is multiplied by E[exp(−s·ΔI)] ≥ 1 − s·E[ΔI].
    """
    params = config.params
    radius = config.window_radius
    miss = 1.0 - cache_hit_probability(config.catalog, config.cache)

    def annulus(density: float, power: float, alpha: float, inner: float, outer: float) -> float:
        return window_truncation_bias(density, alpha, power, inner) - window_truncation_bias(
            density, alpha, power, outer
        )

    lam = params.sc_density
    sc_at = annulus(lam, params.rho_dl, params.alpha1, radius, 2 * radius)
    ul_lo, ul_hi = radius - params.r_ul, 2 * radius + params.r_ul
    ul_at_dl = annulus(lam * miss, params.rho_ul, params.alpha2, ul_lo, ul_hi)
    ul_at_sc = annulus(lam * miss, params.rho_ul, config.sc_uplink.exponent(params), ul_lo, ul_hi)
    s_dl = dl_operating_point(config.theta, params)
    s_sc = sc_operating_point(config.theta, params)
    return estimate.mean * (s_dl * (sc_at + ul_at_dl) + s_sc * (sc_at + ul_at_sc))


# ---------------------------------------------------------------------------
# Cache hit probability
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("eta", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("kappa", [0.1, 0.35, 0.6])
def test_cache_hit_matches_closed_form(eta: float, kappa: float) -> None:
    catalog = FileCatalog(size=100, gamma=0.7, eta=eta)
    cache = CacheModel.from_kappa(kappa, 100)
    config = SimConfig(
        catalog=catalog,
        cache=cache,
        trials=TRIALS,
        hit_mode=HitMode.INDEPENDENT,
        seed=1,
        workers=settings.workers,
    )
    expected = cache_hit_probability(catalog, cache)
    estimate = estimate_cache_hit(config)
    log.info("acceptance_cache_hit", eta=eta, kappa=kappa, mean=estimate.mean, analytic=expected)
    assert estimate.covers(expected, THREE_SIGMA)


# ---------------------------------------------------------------------------
# Success probability
# ---------------------------------------------------------------------------

SUCCESS_GRID = [(density, kappa) for density in (1e-4, 1e-3) for kappa in (0.0, 0.6)]


@pytest.mark.parametrize(("density", "kappa"), SUCCESS_GRID)
def test_uncorrelated_success_equals_bound(density: float, kappa: float) -> None:
    config = _success_config(density, kappa, CorrelationMode.UNCORRELATED)
    bound = _bound(config)
    estimate = estimate_success(config)
    shift = _window_shift_bound(config, estimate)
    log.info(
        "acceptance_uncorrelated",
        density=density,
        kappa=kappa,
        mean=estimate.mean,
        ci95=estimate.half_width_95,
        analytic=bound,
        window_shift=shift,
    )
    assert estimate.covers(bound)
    assert shift < estimate.half_width_95


@pytest.mark.parametrize(("density", "kappa"), SUCCESS_GRID)
def test_correlated_success_not_below_bound(density: float, kappa: float) -> None:
    config = _success_config(density, kappa, CorrelationMode.CORRELATED)
    bound = _bound(config)
    estimate = estimate_success(config)
    log.info("acceptance_correlated", density=density, kappa=kappa, mean=estimate.mean, analytic=bound)
    assert estimate.mean >= bound - 2.0 * estimate.half_width_95


def test_doubled_window_still_matches_bound() -> None:
    config = _success_config(1e-4, 0.0, CorrelationMode.UNCORRELATED, window=4000.0)
    assert estimate_success(config).covers(_bound(config), WIDTHS)


# ---------------------------------------------------------------------------
# Throughput gain
# ---------------------------------------------------------------------------


def test_gain_ordering_on_the_density_sweep() -> None:
    """Caching raises the gain and denser networks lower it, for the fig3 uplink law."""
    gains: dict[tuple[float, float], float] = {}
    for density, kappa in SUCCESS_GRID:
        params = NetworkParams(sc_density=density)
        p_hit = cache_hit_probability(
            FileCatalog(size=100, gamma=0.7, eta=1.0), CacheModel.from_kappa(kappa, 100)
        )
        p_suc = success_probability_lb(1.0, p_hit, params, sc_uplink=UplinkLaw.PHYSICAL)
        gains[(density, kappa)] = throughput_gain(1.0, p_suc, params)
    log.info("acceptance_gain", **{f"tg_{d:g}_{k:g}": g for (d, k), g in gains.items()})
    assert all(math.isfinite(g) and g > 0 for g in gains.values())
    assert gains[(1e-4, 0.6)] > gains[(1e-4, 0.0)]
    assert gains[(1e-3, 0.6)] > gains[(1e-3, 0.0)]
    assert gains[(1e-4, 0.0)] > gains[(1e-3, 0.0)]
