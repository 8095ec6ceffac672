"""fdcache settings, loaded from FDCACHE_* environment variables.

Inherits ``log_level`` and ``workers`` from ``shared.config.BaseRuntimeSettings``.
Adds the default simulation window and the quadrature tolerances used when
an experiment file does not override them.
"""

from __future__ import annotations

from dotenv import load_dotenv
from pydantic import model_validator
from pydantic_settings import SettingsConfigDict

from shared.config import PROJECT_ROOT, BaseRuntimeSettings

from .analytics import QuadratureSettings

load_dotenv(PROJECT_ROOT / ".env", override=False)


class Settings(BaseRuntimeSettings):
    model_config = SettingsConfigDict(env_prefix="FDCACHE_", env_file=".env", extra="ignore")

    # --- Simulation ---
    window_radius: float = 2000.0

    # --- Quadrature ---
    quad_rtol: float = 1e-9
    quad_atol: float = 1e-12

    @model_validator(mode="after")
    def _clamp_fdcache(self) -> Settings:
        """Keep tolerances inside what double precision and QUADPACK can deliver."""
        self.window_radius = max(1.0, self.window_radius)
        self.quad_rtol = min(1e-3, max(1e-13, self.quad_rtol))
        self.quad_atol = min(1e-3, max(1e-300, self.quad_atol))
        return self

    def quadrature(self) -> QuadratureSettings:
        return QuadratureSettings(rtol=self.quad_rtol, atol=self.quad_atol)


settings = Settings()
