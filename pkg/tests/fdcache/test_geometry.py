"""Tests for disc-window point processes, marks and ball counts."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from fdcache.catalog import FileCatalog
from fdcache.geometry import (
    ORIGIN,
    FileField,
    MarkedTriples,
    Point2D,
    TiledFileField,
    attach_marks,
    check_marks,
    count_in_ball,
    sample_file_field,
    sample_ppp_disc,
    typical_triple,
    window_truncation_bias,
)
from shared.errors import InvalidArgumentError, WindowTooSmallError

# ---------------------------------------------------------------------------
# PPP sampling
# ---------------------------------------------------------------------------


class TestSamplePppDisc:
    def test_zero_density_is_empty(self, rng: np.random.Generator) -> None:
        points = sample_ppp_disc(0.0, 100.0, rng)
        assert points.shape == (0, 2)

    def test_points_inside_window(self, rng: np.random.Generator) -> None:
        center = Point2D(50.0, -20.0)
        points = sample_ppp_disc(1e-2, 30.0, rng, center)
        assert points.shape[0] > 0
        assert np.all(np.hypot(points[:, 0] - 50.0, points[:, 1] + 20.0) <= 30.0)

    def test_count_is_poisson(self, rng: np.random.Generator) -> None:
        mean = 1e-3 * math.pi * 100.0**2
        counts = np.array([sample_ppp_disc(1e-3, 100.0, rng).shape[0] for _ in range(2000)])
        assert counts.mean() == pytest.approx(mean, abs=4.0 * math.sqrt(mean / 2000))
        assert counts.var(ddof=1) == pytest.approx(mean, rel=0.15)

    def test_positions_are_uniform(self, rng: np.random.Generator) -> None:
        points = sample_ppp_disc(1.0, 40.0, rng)
        radial = (points[:, 0] ** 2 + points[:, 1] ** 2) / 40.0**2
        assert stats.kstest(radial, "uniform").pvalue > 1e-3
        angles = np.arctan2(points[:, 1], points[:, 0]) + math.pi
        assert stats.kstest(angles / (2 * math.pi), "uniform").pvalue > 1e-3

    @pytest.mark.parametrize(("density", "radius"), [(-1.0, 10.0), (float("nan"), 10.0), (1.0, 0.0)])
    def test_invalid_arguments(
        self, rng: np.random.Generator, density: float, radius: float
    ) -> None:
        with pytest.raises(InvalidArgumentError):
            sample_ppp_disc(density, radius, rng)


# ---------------------------------------------------------------------------
# Marks
# ---------------------------------------------------------------------------


class TestAttachMarks:
    def test_marks_at_fixed_distances(self, rng: np.random.Generator) -> None:
        sc = sample_ppp_disc(1e-3, 500.0, rng)
        triples = attach_marks(sc, 20.0, 5.0, rng)
        assert len(triples) == sc.shape[0]
        assert check_marks(triples, 20.0, 5.0)
        assert np.array_equal(triples.sc, sc)

    def test_empty_input(self, rng: np.random.Generator) -> None:
        triples = attach_marks(np.empty((0, 2)), 20.0, 5.0, rng)
        assert len(triples) == 0
        assert list(triples) == []

    def test_angles_are_uniform_and_independent(self, rng: np.random.Generator) -> None:
        triples = attach_marks(np.zeros((20_000, 2)), 20.0, 5.0, rng)
        ul_angle = np.arctan2(triples.ul[:, 1], triples.ul[:, 0])
        dl_angle = np.arctan2(triples.dl[:, 1], triples.dl[:, 0])
        bins = np.linspace(-math.pi, math.pi, 9)
        observed, _ = np.histogram(ul_angle, bins)
        assert stats.chisquare(observed).pvalue > 1e-3
        assert abs(np.corrcoef(np.cos(ul_angle), np.cos(dl_angle))[0, 1]) < 0.05

    def test_typical_triple_at_origin(self, rng: np.random.Generator) -> None:
        triple = typical_triple(20.0, 5.0, rng)
        assert triple.sc == ORIGIN
        assert triple.ul.distance_to(ORIGIN) == pytest.approx(20.0, rel=1e-9)
        assert triple.dl.distance_to(ORIGIN) == pytest.approx(5.0, rel=1e-9)

    def test_check_marks_detects_drift(self) -> None:
        sc = np.zeros((1, 2))
        triples = MarkedTriples(sc=sc, ul=np.array([[20.0, 0.0]]), dl=np.array([[0.0, 5.1]]))
        assert not check_marks(triples, 20.0, 5.0)

    def test_rejects_nonpositive_distance(self, rng: np.random.Generator) -> None:
        with pytest.raises(InvalidArgumentError):
            attach_marks(np.zeros((1, 2)), 0.0, 5.0, rng)


class TestPoint2D:
    def test_rejects_non_finite(self) -> None:
        with pytest.raises(InvalidArgumentError):
            Point2D(float("inf"), 0.0)

    def test_distance(self) -> None:
        assert Point2D(3.0, 4.0).distance_to(ORIGIN) == 5.0


# ---------------------------------------------------------------------------
# Ball counts
# ---------------------------------------------------------------------------


def _single_file_field(points: list[tuple[float, float]], index: int = 1) -> FileField:
    return FileField(
        points=np.array(points, dtype=np.float64).reshape(-1, 2),
        indices=np.full(len(points), index, dtype=np.int64),
        center=ORIGIN,
        radius=100.0,
    )


class TestCountInBall:
    def test_single_point(self) -> None:
        field = _single_file_field([(3.0, 0.0)])
        assert count_in_ball(field, ORIGIN, 5.0, 1) == 1
        assert count_in_ball(field, ORIGIN, 2.0, 1) == 0

    def test_other_index_not_counted(self) -> None:
        field = _single_file_field([(3.0, 0.0)], index=2)
        assert count_in_ball(field, ORIGIN, 5.0, 1) == 0

    def test_zero_radius(self) -> None:
        field = _single_file_field([(0.0, 0.0)])
        assert count_in_ball(field, ORIGIN, 0.0, 1) == 0

    def test_ball_outside_window(self) -> None:
        field = _single_file_field([(3.0, 0.0)])
        with pytest.raises(WindowTooSmallError) as info:
            count_in_ball(field, Point2D(90.0, 0.0), 20.0, 1)
        assert info.value.ball_extent == pytest.approx(110.0)

    def test_void_probability(self, rng: np.random.Generator) -> None:
        catalog = FileCatalog(size=4, gamma=0.7, eta=0.05)
        radius = 8.0
        trials = 4000
        empty = 0
        for _ in range(trials):
            field = sample_file_field(catalog, ORIGIN, 2 * radius, rng, files=[2])
            empty += count_in_ball(field, ORIGIN, radius, 2) == 0
        expected = math.exp(-catalog.probability(2) * catalog.eta * math.pi * radius**2)
        half_width = 3.0 * math.sqrt(expected * (1 - expected) / trials)
        assert empty / trials == pytest.approx(expected, abs=half_width)

    def test_full_field_marks_cover_catalog(self, rng: np.random.Generator) -> None:
        catalog = FileCatalog(size=3, gamma=0.7, eta=0.5)
        field = sample_file_field(catalog, ORIGIN, 30.0, rng)
        assert len(field) > 0
        assert set(np.unique(field.indices)) <= {1, 2, 3}

    def test_empty_file_list(self, rng: np.random.Generator) -> None:
        field = sample_file_field(FileCatalog(size=3), ORIGIN, 10.0, rng, files=[])
        assert len(field) == 0


# ---------------------------------------------------------------------------
# Tiled shared field
# ---------------------------------------------------------------------------


class TestTiledFileField:
    def test_repeated_queries_are_consistent(self, rng: np.random.Generator) -> None:
        field = TiledFileField(FileCatalog(size=10, eta=0.01), rng, tile=50.0)
        center = Point2D(12.0, -7.0)
        first = [field.contains(center, 40.0, i) for i in range(1, 11)]
        cells = field.sampled_cells
        again = [field.contains(center, 40.0, i) for i in range(1, 11)]
        assert first == again
        assert field.sampled_cells == cells

    def test_nested_balls(self, rng: np.random.Generator) -> None:
        field = TiledFileField(FileCatalog(size=5, eta=0.02), rng, tile=25.0)
        for i in range(1, 6):
            if field.contains(ORIGIN, 10.0, i):
                assert field.contains(ORIGIN, 30.0, i)

    def test_zero_radius_never_contains(self, rng: np.random.Generator) -> None:
        field = TiledFileField(FileCatalog(size=1, eta=100.0), rng, tile=10.0)
        assert not field.contains(ORIGIN, 0.0, 1)

    def test_void_probability(self) -> None:
        catalog = FileCatalog(size=2, gamma=0.0, eta=0.01)
        trials = 3000
        hits = sum(
            TiledFileField(catalog, np.random.default_rng(k), tile=20.0).contains(
                Point2D(5.0, 5.0), 10.0, 1
            )
            for k in range(trials)
        )
        expected = -math.expm1(-0.005 * math.pi * 100.0)
        half_width = 3.0 * math.sqrt(expected * (1 - expected) / trials)
        assert hits / trials == pytest.approx(expected, abs=half_width)

    def test_rejects_bad_tile(self, rng: np.random.Generator) -> None:
        with pytest.raises(InvalidArgumentError):
            TiledFileField(FileCatalog(size=1), rng, tile=0.0)


class TestWindowTruncationBias:
    def test_decays_as_inverse_radius_for_alpha_three(self) -> None:
        near = window_truncation_bias(1e-4, 3.0, 1.0, 1000.0)
        far = window_truncation_bias(1e-4, 3.0, 1.0, 2000.0)
        assert near == pytest.approx(2 * math.pi * 1e-4 / 1000.0)
        assert far == pytest.approx(near / 2)

    def test_rejects_alpha_two(self) -> None:
        with pytest.raises(InvalidArgumentError):
            window_truncation_bias(1e-4, 2.0, 1.0, 1000.0)
