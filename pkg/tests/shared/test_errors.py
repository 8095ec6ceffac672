"""Tests for the shared error hierarchy."""

from __future__ import annotations

import math

import pytest

from shared.errors import (
    ConfigError,
    ConfigParseError,
    DivergenceError,
    FdCacheError,
    InvalidArgumentError,
    NumericalError,
    ResultsIOError,
    WindowTooSmallError,
)


class TestHierarchy:
    @pytest.mark.parametrize(
        ("error", "parents"),
        [
            (InvalidArgumentError, (FdCacheError, ValueError)),
            (WindowTooSmallError, (InvalidArgumentError,)),
            (NumericalError, (FdCacheError, ArithmeticError)),
            (DivergenceError, (NumericalError,)),
            (ConfigParseError, (ConfigError, FdCacheError)),
            (ResultsIOError, (FdCacheError, OSError)),
        ],
    )
    def test_subclassing(self, error: type[Exception], parents: tuple[type, ...]) -> None:
        assert all(issubclass(error, parent) for parent in parents)


class TestMessages:
    def test_window_too_small(self) -> None:
        exc = WindowTooSmallError(110.0, 100.0)
        assert (exc.ball_extent, exc.window_radius) == (110.0, 100.0)
        assert "110 m" in str(exc)

    def test_numerical_tolerance(self) -> None:
        exc = NumericalError("quadrature stalled", 1e-4)
        assert exc.achieved_tolerance == 1e-4
        assert "achieved tolerance 0.0001" in str(exc)

    def test_divergence_has_infinite_tolerance(self) -> None:
        assert math.isinf(DivergenceError("alpha <= 2").achieved_tolerance)

    def test_parse_error_location(self) -> None:
        exc = ConfigParseError("exp.conf", 7, "unknown key 'x'")
        assert exc.line == 7
        assert str(exc) == "exp.conf:7: unknown key 'x'"

    def test_results_error(self) -> None:
        exc = ResultsIOError("out.csv", "disk full")
        assert str(exc) == "out.csv: disk full"
