"""Shared configuration: project root, logger tuning, and settings base class.

``BaseRuntimeSettings`` defines the fields every entry point reads from the
environment (log level, worker count).  Package settings such as
``fdcache.config.Settings`` inherit it and set their own ``env_prefix``.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

from pydantic import model_validator
from pydantic_settings import BaseSettings

PROJECT_ROOT: Path = Path(__file__).resolve().parents[2]

_LOG_LEVEL_NAMES = frozenset({"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"})


class BaseRuntimeSettings(BaseSettings):
    """Common runtime fields inherited by package settings.

    Subclasses MUST set ``model_config`` with their own ``env_prefix`` so
    pydantic-settings resolves the right environment variables.
    """

    log_level: str = "INFO"
    workers: int = 1

    @model_validator(mode="after")
    def _clamp_runtime_bounds(self) -> BaseRuntimeSettings:
        """Ensure sane floors for runtime settings."""
        self.log_level = self.log_level.upper()
        if self.log_level not in _LOG_LEVEL_NAMES:
            self.log_level = "INFO"
        self.workers = max(1, min(self.workers, os.cpu_count() or 1))
        return self


# Loggers of the dependency stack that only add noise to DEBUG sessions.
QUIETED_LOGGERS: tuple[str, ...] = ("dotenv", "concurrent.futures", "asyncio", "hypothesis")


def quiet_third_party_loggers() -> None:
    """Raise library loggers to WARNING so DEBUG output stays fdcache's own."""
    for name in QUIETED_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
