"""Pathloss, fading laws and the network's physical parameters.

All math is linear scale.  Decibel inputs (SI attenuation, SIR thresholds)
are converted once, where they enter: ``NetworkParams`` for the SI
attenuation, the CLI for θ.
"""

from __future__ import annotations

import math
from enum import StrEnum
from typing import overload

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shared.errors import InvalidArgumentError
from shared.types import FloatArray


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


class NodeRole(StrEnum):
    """Process a node belongs to: Φ_SC, Φ_UL or Φ_DL."""

    SC = "sc"
    UL = "ul"
    DL = "dl"


class LinkKind(StrEnum):
    """Ordered link type; UL→DL is the only link with the steeper exponent α₂."""

    SC_TO_SC = "sc_to_sc"
    SC_TO_DL = "sc_to_dl"
    UL_TO_SC = "ul_to_sc"
    UL_TO_DL = "ul_to_dl"
    SELF = "self"


_LINKS: dict[tuple[NodeRole, NodeRole], LinkKind] = {
    (NodeRole.SC, NodeRole.SC): LinkKind.SC_TO_SC,
    (NodeRole.SC, NodeRole.DL): LinkKind.SC_TO_DL,
    (NodeRole.UL, NodeRole.SC): LinkKind.UL_TO_SC,
    (NodeRole.UL, NodeRole.DL): LinkKind.UL_TO_DL,
}


def link_kind(tx: NodeRole, rx: NodeRole, *, same_node: bool = False) -> LinkKind:
    """Link kind from transmitter and receiver process membership."""
    if same_node:
        return LinkKind.SELF
    try:
        return _LINKS[(tx, rx)]
    except KeyError:
        raise InvalidArgumentError(f"no {tx}→{rx} link in this network") from None


class UplinkLaw(StrEnum):
    """Exponent applied to interfering UL nodes as seen by a receiving SC.

    PHYSICAL follows the link rule (UL→SC is not UL→DL, so α₁).  PRINTED
    reuses the DL-node kernel, α₂, which is what the closed-form SC-side
    Laplace transform of the success bound assumes.
    """

    PHYSICAL = "physical"
    PRINTED = "printed"

    def interferer_link(self) -> LinkKind:
        """Link kind whose exponent an interfering UL node sees at an SC."""
        if self is UplinkLaw.PHYSICAL:
            return link_kind(NodeRole.UL, NodeRole.SC)
        return LinkKind.UL_TO_DL

    def exponent(self, params: NetworkParams) -> float:
        return path_exponent(self.interferer_link(), params)


def rician_gamma_params(k_factor: float, si_attenuation_db: float) -> tuple[float, float]:
    """Gamma (shape a, scale b) matching the first two moments of squared-Rician SI power.

    Mean power Ω = 10^{-attenuation/10}; a = (K+1)²/(2K+1), b = Ω/a.
    K = 0 gives a = 1, the exponential law of Rayleigh power.
    """
    if not (math.isfinite(k_factor) and k_factor >= 0):
        raise InvalidArgumentError(f"Rician K-factor must be finite and >= 0, got {k_factor!r}")
    if math.isnan(si_attenuation_db) or si_attenuation_db < 0:
        raise InvalidArgumentError(f"SI attenuation must be >= 0 dB, got {si_attenuation_db!r}")
    shape = (k_factor + 1.0) ** 2 / (2.0 * k_factor + 1.0)
    mean = 0.0 if math.isinf(si_attenuation_db) else db_to_linear(-si_attenuation_db)
    return shape, mean / shape


class NetworkParams(BaseModel):
    """Physical constants of the network; defaults are the reference simulation setting.

    ``si_attenuation_db = inf`` models perfect SI cancellation (b = 0).
    """

    model_config = ConfigDict(frozen=True)

    sc_density: float = Field(default=1e-4, ge=0.0, allow_inf_nan=False)
    r_ul: float = Field(default=20.0, gt=0.0, allow_inf_nan=False)
    r_dl: float = Field(default=5.0, gt=0.0, allow_inf_nan=False)
    rho_ul: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    rho_dl: float = Field(default=0.2, gt=0.0, allow_inf_nan=False)
    alpha1: float = Field(default=3.0, allow_inf_nan=False)
    alpha2: float = Field(default=4.0, allow_inf_nan=False)
    k_factor: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    si_attenuation_db: float = Field(default=80.0, ge=0.0)

    @field_validator("si_attenuation_db")
    @classmethod
    def _reject_nan(cls, value: float) -> float:
        if math.isnan(value):
            raise ValueError("SI attenuation must not be NaN")
        return value

    @model_validator(mode="after")
    def _check_exponents(self) -> NetworkParams:
        if not self.alpha1 > 2.0:
            raise ValueError(f"alpha1 must be > 2, got {self.alpha1}")
        if self.alpha2 < self.alpha1:
            raise ValueError(f"alpha2 must be >= alpha1, got {self.alpha2} < {self.alpha1}")
        return self

    @property
    def a(self) -> float:
        """Gamma shape of the SI power gain."""
        return rician_gamma_params(self.k_factor, self.si_attenuation_db)[0]

    @property
    def b(self) -> float:
        """Gamma scale of the SI power gain."""
        return rician_gamma_params(self.k_factor, self.si_attenuation_db)[1]


def path_exponent(kind: LinkKind, params: NetworkParams) -> float:
    if kind is LinkKind.SELF:
        raise InvalidArgumentError("the self link has no distance and no pathloss exponent")
    return params.alpha2 if kind is LinkKind.UL_TO_DL else params.alpha1


@overload
def pathloss(kind: LinkKind, distance: float, params: NetworkParams) -> float: ...
@overload
def pathloss(kind: LinkKind, distance: FloatArray, params: NetworkParams) -> FloatArray: ...
def pathloss(
    kind: LinkKind, distance: float | FloatArray, params: NetworkParams
) -> float | FloatArray:
    """Attenuation r^{-α}: α₂ on UL→DL links, α₁ on every other link."""
    alpha = path_exponent(kind, params)
    if isinstance(distance, np.ndarray):
        if distance.size and not np.all(distance > 0):
            raise InvalidArgumentError("pathloss needs strictly positive distances")
        return np.power(distance, -alpha)
    if not distance > 0:
        raise InvalidArgumentError(f"pathloss needs a positive distance, got {distance!r}")
    return float(distance) ** -alpha


def pathloss_squared(kind: LinkKind, distance_sq: FloatArray, params: NetworkParams) -> FloatArray:
    """``pathloss`` from squared distances, skipping the square root in hot loops."""
    alpha = path_exponent(kind, params)
    if distance_sq.size and not np.all(distance_sq > 0):
        raise InvalidArgumentError("pathloss needs strictly positive distances")
    return np.power(distance_sq, -0.5 * alpha)


@overload
def sample_rayleigh_power(rng: np.random.Generator, size: None = None) -> float: ...
@overload
def sample_rayleigh_power(rng: np.random.Generator, size: int) -> FloatArray: ...
def sample_rayleigh_power(rng: np.random.Generator, size: int | None = None) -> float | FloatArray:
    """Unit-mean exponential power gain (χ²₂ normalised so E[h] = 1)."""
    if size is None:
        return float(rng.standard_exponential())
    return rng.standard_exponential(size)


@overload
def sample_si_power(
    params: NetworkParams, rng: np.random.Generator, size: None = None
) -> float: ...
@overload
def sample_si_power(params: NetworkParams, rng: np.random.Generator, size: int) -> FloatArray: ...
def sample_si_power(
    params: NetworkParams, rng: np.random.Generator, size: int | None = None
) -> float | FloatArray:
    """Gamma(a, b) self-interference power gain; mean a·b."""
    shape, scale = params.a, params.b
    if size is None:
        return float(rng.gamma(shape, scale))
    return rng.gamma(shape, scale, size)
