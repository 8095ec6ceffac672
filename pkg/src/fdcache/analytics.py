"""Closed forms and integrals of the cache-aided full-duplex model.

Cache hit probability, the radial kernels Υ̂/Υ̃ and the angular kernel Ω,
the three interference Laplace transforms, the success-probability lower
bound, the FD throughput gain and the area spectral efficiency.

Every operation is a pure function of its arguments.  Numerical settings
travel as a frozen ``QuadratureSettings`` value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Final

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import integrate

from shared.errors import DivergenceError, InvalidArgumentError, NumericalError

from .catalog import FileCatalog
from .channel import NetworkParams, UplinkLaw

log = structlog.get_logger(__name__)

# Exponents this close to 2 make csc(2π/α) blow up before the integral diverges.
ALPHA_DEGENERACY: Final = 1e-6
_MAX_RADIUS: Final = 1e18
_QUAD_SLACK: Final = 100.0


class QuadratureSettings(BaseModel):
    """Tolerances for the angular (Ω) and radial (Υ̃) integrals."""

    model_config = ConfigDict(frozen=True)

    rtol: float = Field(default=1e-9, gt=0.0)
    atol: float = Field(default=1e-12, gt=0.0)
    panels: int = Field(default=64, ge=16)
    max_panels: int = Field(default=2**20, ge=16)
    radial_truncation: float = Field(default=1e-10, gt=0.0)

    @field_validator("panels", "max_panels")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"panel counts must be powers of two, got {value}")
        return value

    @model_validator(mode="after")
    def _ordered(self) -> QuadratureSettings:
        if self.max_panels < self.panels:
            raise ValueError("max_panels must be >= panels")
        return self


DEFAULT_QUADRATURE: Final = QuadratureSettings()


class CacheModel(BaseModel):
    """Storage of ``storage`` files per SC, request radius R_R, cache radius R_C."""

    model_config = ConfigDict(frozen=True)

    storage: int = Field(ge=0)
    request_radius: float = Field(default=8.0, ge=0.0, allow_inf_nan=False)
    cache_radius: float = Field(default=40.0, ge=0.0, allow_inf_nan=False)
    catalog_size: int = Field(ge=1)

    @model_validator(mode="after")
    def _fits_catalog(self) -> CacheModel:
        if self.storage > self.catalog_size:
            raise ValueError(f"storage {self.storage} exceeds catalog size {self.catalog_size}")
        return self

    @property
    def kappa(self) -> float:
        """Storage to catalog ratio S/F."""
        return self.storage / self.catalog_size

    @classmethod
    def from_kappa(
        cls,
        kappa: float,
        catalog_size: int,
        *,
        request_radius: float = 8.0,
        cache_radius: float = 40.0,
    ) -> CacheModel:
        """Cache holding round(κ·F) files."""
        if not 0.0 <= kappa <= 1.0:
            raise InvalidArgumentError(f"kappa must lie in [0, 1], got {kappa!r}")
        return cls(
            storage=round(kappa * catalog_size),
            request_radius=request_radius,
            cache_radius=cache_radius,
            catalog_size=catalog_size,
        )


@dataclass(frozen=True, slots=True)
class AnalyticResult:
    """Every analytic quantity at one SIR threshold ``theta`` (linear)."""

    theta: float
    p_hit: float
    p_suc_lb: float
    laplace: dict[str, float] = field(default_factory=dict)
    tg_fd: float = 0.0
    ase: float = 0.0


# ---------------------------------------------------------------------------
# Cache hit probability
# ---------------------------------------------------------------------------


def cache_hit_probability(catalog: FileCatalog, cache: CacheModel) -> float:
    """(1/F)·Σ_{i≤S} (1 − e^{−p_i η π R_R²})(1 − e^{−p_i η π R_C²})."""
    if cache.catalog_size != catalog.size:
        raise InvalidArgumentError(
            f"cache built for {cache.catalog_size} files, catalog has {catalog.size}"
        )
    if cache.storage == 0:
        return 0.0
    density = catalog.intensities()[: cache.storage]
    in_request = -np.expm1(-density * math.pi * cache.request_radius**2)
    in_cache = -np.expm1(-density * math.pi * cache.cache_radius**2)
    return math.fsum(in_request * in_cache) / catalog.size


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _check_s(s: float) -> None:
    if not (s >= 0 and not math.isnan(s)):
        raise InvalidArgumentError(f"Laplace variable must be >= 0, got {s!r}")


def _csc_two_pi_over(alpha: float) -> float:
    if not alpha > 2.0 + ALPHA_DEGENERACY:
        raise DivergenceError(f"radial interference integral diverges for alpha={alpha!r} <= 2")
    return 1.0 / math.sin(2.0 * math.pi / alpha)


def radial_closed_form(c: float, alpha: float) -> float:
    """∫₀^∞ (1 − 1/(1 + c r^{−α})) r dr = π c^{2/α} csc(2π/α) / α."""
    csc = _csc_two_pi_over(alpha)
    if c == 0:
        return 0.0
    return math.pi * c ** (2.0 / alpha) * csc / alpha


def upsilon_hat(s: float, params: NetworkParams) -> float:
    """Υ̂(s): SC interferers seen at the DL node, closed form."""
    _check_s(s)
    return radial_closed_form(s * params.rho_dl, params.alpha1)


def _initial_panels(
    c: float, r: float, r_ul: float, alpha: float, settings: QuadratureSettings
) -> int:
    """Smallest power-of-two panel count putting ~8 nodes across the interference peak.

    The peak sits where the UL ring passes closest to the receiver; its
    angular width is about max(|r − R_UL|, c^{1/α}) / r.
    """
    width = max(abs(r - r_ul), c ** (1.0 / alpha))
    needed = 16.0 * math.pi * r / width if width > 0 else math.inf
    n = settings.panels
    while n < needed and n < settings.max_panels // 2:
        n *= 2
    return n


def _omega_complement(
    c: float, r: float, r_ul: float, alpha: float, settings: QuadratureSettings
) -> float:
    """1 − Ω by panel-doubling trapezoid; relative stopping on the complement itself.

    The integrand 1/(1 + d^α/c) is periodic and smooth in φ, so the
    trapezoid rule converges spectrally.  Integrating the complement keeps
    full relative accuracy far from the UL ring, where Ω is within 1e-30 of one.
    """
    half_alpha = 0.5 * alpha

    def g(phi: np.ndarray) -> np.ndarray:
        # ‖u − rx‖² with the UL node at angle φ around an SC at distance r
        d2 = (r_ul + r * np.cos(phi)) ** 2 + (r * np.sin(phi)) ** 2
        return 1.0 / (1.0 + np.power(d2, half_alpha) / c)

    n = _initial_panels(c, r, r_ul, alpha, settings)
    estimate = float(np.mean(g(2.0 * math.pi * np.arange(n) / n)))
    while True:
        midpoints = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        refined = 0.5 * (estimate + float(np.mean(g(midpoints))))
        n *= 2
        change = abs(refined - estimate)
        estimate = refined
        if change <= settings.rtol * abs(refined) or refined == 0.0:
            return refined
        if n >= settings.max_panels:
            raise NumericalError(
                f"angular kernel did not converge at r={r:.6g} with {n} panels",
                achieved_tolerance=change / abs(refined),
            )


def omega(
    s: float,
    r: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    ul_exponent: float | None = None,
) -> float:
    """Ω(s, r): angular average of 1/(1 + s ρ_UL ‖u(y) − z‖^{−α₂}), ‖y − z‖ = r.

    ``ul_exponent`` replaces α₂ for UL interferers seen by an SC receiver.
    """
    _check_s(s)
    if not r >= 0:
        raise InvalidArgumentError(f"distance must be >= 0, got {r!r}")
    if s == 0 or params.rho_ul == 0:
        return 1.0
    alpha = params.alpha2 if ul_exponent is None else ul_exponent
    return 1.0 - _omega_complement(s * params.rho_ul, r, params.r_ul, alpha, settings)


def _tail_bound(radius: float, s: float, params: NetworkParams, alpha_ul: float) -> float:
    """First-order bound on ∫_R^∞ (1 − Ω/(1 + sρ_DL r^{−α₁})) r dr, valid for R ≥ 2 R_UL."""
    sc_part = params.rho_dl * radius ** (2.0 - params.alpha1) / (params.alpha1 - 2.0)
    ul_part = 2.0 * params.rho_ul * (radius - params.r_ul) ** (2.0 - alpha_ul) / (alpha_ul - 2.0)
    return s * (sc_part + ul_part)


def _radial_edges(s: float, params: NetworkParams, alpha_ul: float, threshold: float) -> list[float]:
    """Geometric partition of [0, R*] with R_UL as a breakpoint and the tail bound below ``threshold``."""
    scales = (
        params.r_ul,
        (s * params.rho_dl) ** (1.0 / params.alpha1),
        (s * params.rho_ul) ** (1.0 / alpha_ul),
    )
    first = min(x for x in scales if x > 0) / 16.0
    edges = [0.0, first]
    while edges[-1] < 2.0 * params.r_ul or _tail_bound(edges[-1], s, params, alpha_ul) > threshold:
        if edges[-1] > _MAX_RADIUS:
            raise NumericalError(
                "radial tail bound did not reach the truncation threshold",
                achieved_tolerance=_tail_bound(edges[-1], s, params, alpha_ul),
            )
        edges.append(edges[-1] * 2.0)
    return sorted({*edges, params.r_ul})


def upsilon_tilde(
    s: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    ul_exponent: float | None = None,
) -> float:
    """Υ̃(s) = ∫₀^∞ (1 − Ω(s, r)/(1 + s ρ_DL r^{−α₁})) r dr.

    Adaptive Gauss–Kronrod (QUADPACK) on a geometric partition of [0, R*];
    R* is the first radius where the analytic tail bound drops below
    ``settings.radial_truncation``.
    """
    _check_s(s)
    _csc_two_pi_over(params.alpha1)
    if s == 0:
        return 0.0
    if params.rho_ul == 0:
        return upsilon_hat(s, params)
    alpha_ul = params.alpha2 if ul_exponent is None else ul_exponent
    _csc_two_pi_over(alpha_ul)

    c_sc = s * params.rho_dl
    c_ul = s * params.rho_ul

    def integrand(r: float) -> float:
        r_alpha = r**params.alpha1
        denom = r_alpha + c_sc
        ul_hit = _omega_complement(c_ul, r, params.r_ul, alpha_ul, settings)
        # 1 − A·Ω written as (1 − A) + A·(1 − Ω), both parts formed directly
        return (c_sc / denom + (r_alpha / denom) * ul_hit) * r

    edges = _radial_edges(s, params, alpha_ul, settings.radial_truncation)
    pieces = len(edges) - 1
    total = 0.0
    error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:], strict=True):
        value, abserr = integrate.quad(
            integrand, lo, hi, epsabs=settings.atol / pieces, epsrel=settings.rtol, limit=200
        )
        total += value
        error += abserr
    budget = max(settings.atol, settings.rtol * abs(total)) * _QUAD_SLACK
    if error > budget:
        raise NumericalError(
            f"radial kernel at s={s:.6g} missed its tolerance", achieved_tolerance=error
        )
    log.debug("upsilon_tilde", s=s, value=total, pieces=pieces, r_max=edges[-1], abserr=error)
    return total


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------


def _check_probability(p: float, name: str = "p_hit") -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {p!r}")


def laplace_hit(
    s: float,
    p_hit: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    ul_exponent: float | None = None,
) -> float:
    """Interference Laplace transform at the DL node on a cache hit.

    exp(−2πλ P_hit Υ̂(s)) · exp(−2πλ (1 − P_hit) Υ̃(s)): hit cells contribute
    their SC alone, miss cells their SC and their UL node.
    """
    _check_s(s)
    _check_probability(p_hit)
    if s == 0 or params.sc_density == 0:
        return 1.0
    exponent = p_hit * upsilon_hat(s, params)
    if p_hit < 1.0:
        exponent += (1.0 - p_hit) * upsilon_tilde(s, params, settings, ul_exponent=ul_exponent)
    return math.exp(-2.0 * math.pi * params.sc_density * exponent)


def self_interference_factor(s: float, params: NetworkParams) -> float:
    """E[exp(−s ρ_DL h_xx)] = (1 + s ρ_DL b)^{−a} for Gamma(a, b) SI power."""
    return (1.0 + s * params.rho_dl * params.b) ** -params.a


def laplace_miss_sc(
    s: float,
    p_hit: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    ul_exponent: float | None = None,
) -> float:
    """Interference Laplace transform at the SC on a cache miss (SI factor × network part)."""
    _check_s(s)
    network = laplace_hit(s, p_hit, params, settings, ul_exponent=ul_exponent)
    return self_interference_factor(s, params) * network


def laplace_miss_dl(
    s: float,
    p_hit: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Interference Laplace transform at the DL node on a cache miss.

    The typical UL node adds inter-node interference from distance R_DL
    around the SC, hence the extra Ω(s, R_DL).
    """
    return omega(s, params.r_dl, params, settings) * laplace_hit(s, p_hit, params, settings)


# ---------------------------------------------------------------------------
# Success probability and derived metrics
# ---------------------------------------------------------------------------


def _check_theta(theta: float) -> None:
    if not (theta > 0 and math.isfinite(theta)):
        raise InvalidArgumentError(f"SIR threshold must be finite and > 0, got {theta!r}")


def dl_operating_point(theta: float, params: NetworkParams) -> float:
    """s = θ ρ_DL^{−1} R_DL^{α₁}, where the DL-hop success equals the Laplace transform."""
    return theta * params.r_dl**params.alpha1 / params.rho_dl


def sc_operating_point(theta: float, params: NetworkParams) -> float:
    """s = θ ρ_UL^{−1} R_UL^{α₁} for the UL→SC hop; infinite when the UL node is silent."""
    if params.rho_ul == 0:
        return math.inf
    return theta * params.r_ul**params.alpha1 / params.rho_ul


def _operating_laplace(
    theta: float,
    p_hit: float,
    params: NetworkParams,
    settings: QuadratureSettings,
    sc_uplink: UplinkLaw,
) -> dict[str, float]:
    """The three Laplace transforms at their operating points for ``theta``."""
    s_dl = dl_operating_point(theta, params)
    s_sc = sc_operating_point(theta, params)
    hit = laplace_hit(s_dl, p_hit, params, settings)
    values = {
        "hit": hit,
        "miss_sc": 0.0,
        "miss_dl": omega(s_dl, params.r_dl, params, settings) * hit,
    }
    if not math.isinf(s_sc):
        values["miss_sc"] = laplace_miss_sc(
            s_sc, p_hit, params, settings, ul_exponent=sc_uplink.exponent(params)
        )
    return values


def _combine(p_hit: float, laplace: dict[str, float]) -> float:
    miss = laplace["miss_sc"] * laplace["miss_dl"]
    return min(1.0, max(0.0, p_hit * laplace["hit"] + (1.0 - p_hit) * miss))


def success_probability_lb(
    theta: float,
    p_hit: float,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    sc_uplink: UplinkLaw = UplinkLaw.PRINTED,
) -> float:
    """Lower bound on the end-to-end success probability at SIR threshold ``theta``.

    P_hit·L_hit(s_DL) + (1 − P_hit)·L_miss,SC(s_SC)·L_miss,DL(s_DL).  The
    bound is exact when UL and DL hops see independent interferer layouts.
    ``sc_uplink`` selects the exponent of UL interferers at the SC.
    """
    _check_theta(theta)
    _check_probability(p_hit)
    return _combine(p_hit, _operating_laplace(theta, p_hit, params, settings, sc_uplink))


def cache_free_hd_success(theta: float, params: NetworkParams) -> float:
    """Half-duplex cache-free baseline in the throughput-gain denominator.

    exp(−2πλ · π θ^{2/α₁} (R_UL² + R_DL²) csc(2π/α₁) / α₁).
    """
    _check_theta(theta)
    area = params.r_ul**2 + params.r_dl**2
    kernel = math.pi * theta ** (2.0 / params.alpha1) * area * _csc_two_pi_over(params.alpha1)
    return math.exp(-2.0 * math.pi * params.sc_density * kernel / params.alpha1)


def throughput_gain(theta: float, p_suc: float, params: NetworkParams) -> float:
    """FD throughput gain 2·P_suc over the cache-free half-duplex baseline."""
    _check_probability(p_suc, "p_suc")
    return 2.0 * p_suc / cache_free_hd_success(theta, params)


def area_spectral_efficiency(theta: float, p_suc: float, density: float) -> float:
    """λ · P_suc · log₂(1 + θ) in bits/s/Hz/m²."""
    _check_theta(theta)
    return density * p_suc * math.log2(1.0 + theta)


def evaluate(
    theta: float,
    catalog: FileCatalog,
    cache: CacheModel,
    params: NetworkParams,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
    *,
    sc_uplink: UplinkLaw = UplinkLaw.PRINTED,
) -> AnalyticResult:
    """All analytic quantities at one threshold, Laplace values at their operating points."""
    _check_theta(theta)
    p_hit = cache_hit_probability(catalog, cache)
    laplace = _operating_laplace(theta, p_hit, params, settings, sc_uplink)
    p_suc = _combine(p_hit, laplace)
    result = AnalyticResult(
        theta=theta,
        p_hit=p_hit,
        p_suc_lb=p_suc,
        laplace=laplace,
        tg_fd=throughput_gain(theta, p_suc, params),
        ase=area_spectral_efficiency(theta, p_suc, params.sc_density),
    )
    log.info("analytic_evaluated", theta=theta, p_hit=p_hit, p_suc_lb=p_suc, tg_fd=result.tg_fd)
    return result
