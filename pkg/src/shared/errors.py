"""Shared error hierarchy used across all modules.

Four categories cover every failure mode:
  - InvalidArgumentError: a precondition on an input value does not hold
  - NumericalError: an integral or series could not reach its tolerance
  - ConfigError: experiment file or settings missing/invalid
  - ResultsIOError: results could not be written or read back

Modules raise the most specific subclass that applies. Callers catch at
whatever granularity they need: catching FdCacheError handles everything.
WindowTooSmallError ⊂ InvalidArgumentError and DivergenceError ⊂ NumericalError,
so catch the subclass first when the distinction matters.
"""

from __future__ import annotations

from pathlib import Path


class FdCacheError(Exception):
    """Base for all fdcache failures."""


# ---------------------------------------------------------------------------
# Argument errors
# ---------------------------------------------------------------------------


class InvalidArgumentError(FdCacheError, ValueError):
    """An input violates the operation's precondition (range, sign, NaN)."""


class WindowTooSmallError(InvalidArgumentError):
    """A query ball extends beyond the window a point field was sampled in."""

    def __init__(self, ball_extent: float, window_radius: float) -> None:
        self.ball_extent = ball_extent
        self.window_radius = window_radius
        super().__init__(
            f"ball reaches {ball_extent:.6g} m from the window center, "
            f"window radius is {window_radius:.6g} m"
        )


# ---------------------------------------------------------------------------
# Numerical errors
# ---------------------------------------------------------------------------


class NumericalError(FdCacheError, ArithmeticError):
    """Quadrature or series evaluation failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tolerance: float = float("nan")) -> None:
        self.achieved_tolerance = achieved_tolerance
        super().__init__(f"{message} (achieved tolerance {achieved_tolerance:.3g})")


class DivergenceError(NumericalError):
    """The requested quantity diverges (pathloss exponent at or below 2)."""

    def __init__(self, message: str) -> None:
        super().__init__(message, achieved_tolerance=float("inf"))


# ---------------------------------------------------------------------------
# Configuration errors
# ---------------------------------------------------------------------------


class ConfigError(FdCacheError, ValueError):
    """Experiment configuration missing or invalid."""


class ConfigParseError(ConfigError):
    """A config file line could not be parsed."""

    def __init__(self, path: Path | str, line: int, detail: str) -> None:
        self.path = Path(path)
        self.line = line
        self.detail = detail
        super().__init__(f"{self.path}:{line}: {detail}")


# ---------------------------------------------------------------------------
# I/O errors
# ---------------------------------------------------------------------------


class ResultsIOError(FdCacheError, OSError):
    """Reading or writing a results file failed."""

    def __init__(self, path: Path | str, detail: str) -> None:
        self.path = Path(path)
        self.detail = detail
        super().__init__(f"{self.path}: {detail}")
