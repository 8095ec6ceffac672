"""Point-process sampling in disc windows, isotropic marks, and ball counts.

Point sets are ``(n, 2)`` float arrays so interference sums stay vectorised;
``Point2D`` is used for single locations (the typical node, ball centers).
Every sampler takes an explicit ``numpy.random.Generator``: there is no
module-level random state.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
import structlog

from shared.errors import InvalidArgumentError, WindowTooSmallError
from shared.types import FloatArray, IntArray

from .catalog import FileCatalog

log = structlog.get_logger(__name__)

_MARK_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> FloatArray:
        return np.array([self.x, self.y], dtype=np.float64)


ORIGIN = Point2D(0.0, 0.0)


@dataclass(frozen=True, slots=True)
class MarkedTriple:
    """One SC with its UL node u(x) and DL node d(x)."""

    sc: Point2D
    ul: Point2D
    dl: Point2D


@dataclass(frozen=True, slots=True)
class MarkedTriples:
    """Vectorised triples: row k of ``sc``, ``ul`` and ``dl`` belong together."""

    sc: FloatArray
    ul: FloatArray
    dl: FloatArray

    def __len__(self) -> int:
        return int(self.sc.shape[0])

    def __getitem__(self, k: int) -> MarkedTriple:
        return MarkedTriple(
            sc=Point2D(*map(float, self.sc[k])),
            ul=Point2D(*map(float, self.ul[k])),
            dl=Point2D(*map(float, self.dl[k])),
        )

    def __iter__(self) -> Iterator[MarkedTriple]:
        return (self[k] for k in range(len(self)))

    @classmethod
    def empty(cls) -> MarkedTriples:
        blank = np.empty((0, 2), dtype=np.float64)
        return cls(sc=blank, ul=blank, dl=blank)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _check_density(density: float) -> None:
    if not math.isfinite(density) or density < 0:
        raise InvalidArgumentError(f"density must be finite and >= 0, got {density!r}")


def uniform_in_disc(count: int, radius: float, rng: np.random.Generator) -> FloatArray:
    """``count`` i.i.d. uniform points on the disc of ``radius`` at the origin."""
    r = radius * np.sqrt(rng.random(count))
    phi = rng.uniform(0.0, 2.0 * math.pi, count)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_ppp_disc(
    density: float,
    radius: float,
    rng: np.random.Generator,
    center: Point2D = ORIGIN,
) -> FloatArray:
    """Homogeneous PPP of ``density`` (points/m²) restricted to a disc.

    Count ~ Poisson(density·π·radius²), positions i.i.d. uniform given the count.
    """
    _check_density(density)
    if not radius > 0:
        raise InvalidArgumentError(f"window radius must be > 0, got {radius!r}")
    count = int(rng.poisson(density * math.pi * radius * radius)) if density > 0 else 0
    points = uniform_in_disc(count, radius, rng)
    if center != ORIGIN:
        points += center.as_array()
    return points


def _isotropic_offsets(count: int, distance: float, rng: np.random.Generator) -> FloatArray:
    phi = rng.uniform(0.0, 2.0 * math.pi, count)
    return distance * np.column_stack((np.cos(phi), np.sin(phi)))


def attach_marks(
    sc_points: FloatArray,
    r_ul: float,
    r_dl: float,
    rng: np.random.Generator,
) -> MarkedTriples:
    """Give every SC a UL node at exactly ``r_ul`` and a DL node at exactly ``r_dl``.

    Angles are independent and uniform on [0, 2π), across SCs and between
    the UL and DL mark of the same SC.
    """
    if not (r_ul > 0 and r_dl > 0):
        raise InvalidArgumentError(f"mark distances must be > 0, got R_UL={r_ul}, R_DL={r_dl}")
    sc = np.asarray(sc_points, dtype=np.float64).reshape(-1, 2)
    count = sc.shape[0]
    ul = sc + _isotropic_offsets(count, r_ul, rng)
    dl = sc + _isotropic_offsets(count, r_dl, rng)
    return MarkedTriples(sc=sc, ul=ul, dl=dl)


def typical_triple(r_ul: float, r_dl: float, rng: np.random.Generator) -> MarkedTriple:
    """Typical SC at the origin with isotropic marks."""
    return attach_marks(np.zeros((1, 2)), r_ul, r_dl, rng)[0]


def check_marks(triples: MarkedTriples, r_ul: float, r_dl: float) -> bool:
    """True when every mark sits at its fixed distance within 1e-9 relative."""
    ul_dist = np.hypot(*(triples.ul - triples.sc).T)
    dl_dist = np.hypot(*(triples.dl - triples.sc).T)
    return bool(
        np.all(np.abs(ul_dist - r_ul) <= _MARK_TOLERANCE * r_ul)
        and np.all(np.abs(dl_dist - r_dl) <= _MARK_TOLERANCE * r_dl)
    )


# ---------------------------------------------------------------------------
# File fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FileField:
    """File locations (rows of ``points``) with 1-based file ``indices``, in a disc window."""

    points: FloatArray
    indices: IntArray
    center: Point2D
    radius: float

    def __len__(self) -> int:
        return int(self.indices.shape[0])


def sample_file_field(
    catalog: FileCatalog,
    center: Point2D,
    radius: float,
    rng: np.random.Generator,
    files: IntArray | list[int] | None = None,
) -> FileField:
    """Sample the marked file field Ψ in the disc ``B(center, radius)``.

    With ``files`` given, only those file indices are realised (each one a
    thinned PPP of density p_i·η); otherwise all files are, via one PPP of
    density η with popularity marks.
    """
    if files is None:
        points = sample_ppp_disc(catalog.eta, radius, rng, center)
        indices = catalog.sample_requests(rng, points.shape[0])
        return FileField(points=points, indices=indices, center=center, radius=radius)

    blocks: list[FloatArray] = []
    labels: list[IntArray] = []
    for index in np.unique(np.asarray(files, dtype=np.int64)):
        pts = sample_ppp_disc(catalog.probability(int(index)) * catalog.eta, radius, rng, center)
        blocks.append(pts)
        labels.append(np.full(pts.shape[0], index, dtype=np.int64))
    if not blocks:
        return FileField(
            points=np.empty((0, 2)), indices=np.empty(0, np.int64), center=center, radius=radius
        )
    return FileField(
        points=np.concatenate(blocks), indices=np.concatenate(labels), center=center, radius=radius
    )


def count_in_ball(field: FileField, center: Point2D, radius: float, index: int) -> int:
    """Number of file-``index`` points within ``radius`` of ``center``.

    Raises ``WindowTooSmallError`` when the ball is not contained in the
    field's sampling window, since points outside it were never drawn.
    """
    if not radius >= 0:
        raise InvalidArgumentError(f"ball radius must be >= 0, got {radius!r}")
    extent = center.distance_to(field.center) + radius
    if extent > field.radius * (1.0 + 1e-12):
        raise WindowTooSmallError(extent, field.radius)
    if radius == 0 or len(field) == 0:
        return 0
    mask = field.indices == index
    offsets = field.points[mask] - center.as_array()
    return int(np.count_nonzero(np.einsum("ij,ij->i", offsets, offsets) <= radius * radius))


@dataclass
class TiledFileField:
    """Shared file field over the whole plane, sampled lazily per square tile.

    Each (file, tile) cell is drawn once, on first use, from the generator
    owned by the field; later queries reuse it.  All balls queried on one
    instance therefore see the same realisation of Ψ, which is what makes
    cache decisions of neighbouring cells spatially correlated.
    """

    catalog: FileCatalog
    rng: np.random.Generator
    tile: float
    _cells: dict[tuple[int, int, int], FloatArray] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.tile > 0:
            raise InvalidArgumentError(f"tile side must be > 0, got {self.tile!r}")

    def _cell(self, index: int, ix: int, iy: int) -> FloatArray:
        key = (index, ix, iy)
        cached = self._cells.get(key)
        if cached is not None:
            return cached
        mean = self.catalog.probability(index) * self.catalog.eta * self.tile * self.tile
        count = int(self.rng.poisson(mean)) if mean > 0 else 0
        corner = np.array([ix * self.tile, iy * self.tile])
        pts = corner + self.tile * self.rng.random((count, 2))
        self._cells[key] = pts
        return pts

    def contains(self, center: Point2D, radius: float, index: int) -> bool:
        """True if at least one file-``index`` point lies in ``B(center, radius)``."""
        if radius <= 0:
            return False
        r2 = radius * radius
        tile = self.tile
        xs = range(math.floor((center.x - radius) / tile), math.floor((center.x + radius) / tile) + 1)
        ys = range(math.floor((center.y - radius) / tile), math.floor((center.y + radius) / tile) + 1)
        c = center.as_array()
        for ix in xs:
            for iy in ys:
                pts = self._cell(index, ix, iy)
                if pts.shape[0] and np.any(np.einsum("ij,ij->i", pts - c, pts - c) <= r2):
                    return True
        return False

    @property
    def sampled_cells(self) -> int:
        return len(self._cells)


def window_truncation_bias(
    density: float, alpha: float, received_power: float, radius: float
) -> float:
    """Mean interference from a PPP beyond ``radius`` (first order, unit-mean fades).

    2πλ·ρ·R^{2-α}/(α-2): the part of the mean aggregate interference a
    finite window drops.  For α = 3 it decays as 1/R.
    """
    if alpha <= 2:
        raise InvalidArgumentError(f"mean tail interference diverges for alpha <= 2, got {alpha}")
    return 2.0 * math.pi * density * received_power * radius ** (2.0 - alpha) / (alpha - 2.0)
