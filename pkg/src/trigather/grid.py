"""Triangular-grid geometry in doubled integer coordinates.

A vertical edge spans two units of ``y``; a diagonal edge changes both
``x`` and ``y`` by one.  Every vertex therefore has ``x + y`` even, and
all six neighbour offsets are integral.

Two families of slanted lattice lines are indexed by integer keys:

* negative slants are level sets of ``x + y`` (smaller key = further left),
* positive slants are level sets of ``y - x`` (smaller key = further right).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple


class Coord(NamedTuple):
    x: int
    y: int

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


def is_vertex(c: Coord) -> bool:
    return (c.x + c.y) % 2 == 0


class Direction(enum.Enum):
    """The six neighbour slots of a robot, named from its own point of view."""

    V1 = (0, -2)
    V2L = (-1, -1)
    V2R = (1, -1)
    V3L = (-1, 1)
    V3R = (1, 1)
    V4 = (0, 2)

    @property
    def dx(self) -> int:
        return self.value[0]

    @property
    def dy(self) -> int:
        return self.value[1]


# Slot order used by View and by serialized traces.
DIRECTIONS: tuple[Direction, ...] = (
    Direction.V1,
    Direction.V2L,
    Direction.V2R,
    Direction.V3L,
    Direction.V3R,
    Direction.V4,
)

OFFSETS: tuple[tuple[int, int], ...] = tuple(d.value for d in DIRECTIONS)

_MIRROR = {
    Direction.V1: Direction.V1,
    Direction.V2L: Direction.V2R,
    Direction.V2R: Direction.V2L,
    Direction.V3L: Direction.V3R,
    Direction.V3R: Direction.V3L,
    Direction.V4: Direction.V4,
}


def neighbor(c: Coord, d: Direction) -> Coord:
    dx, dy = d.value
    return Coord(c.x + dx, c.y + dy)


def neighbors(c: Coord) -> list[Coord]:
    return [Coord(c.x + dx, c.y + dy) for dx, dy in OFFSETS]


def mirror_coord(c: Coord, axis_x: int = 0) -> Coord:
    return Coord(2 * axis_x - c.x, c.y)


def mirror_direction(d: Direction) -> Direction:
    return _MIRROR[d]


def slant_keys(c: Coord) -> tuple[int, int]:
    """Return ``(x + y, y - x)``: the negative- and positive-slant indices of ``c``."""
    return c.x + c.y, c.y - c.x


def grid_distance(a: Coord, b: Coord) -> int:
    """Number of edges on a shortest lattice path between two vertices."""
    dx = abs(a.x - b.x)
    dy = abs(a.y - b.y)
    return dx + max(0, (dy - dx) // 2)


Point = tuple[Fraction, Fraction]


def _pt(x, y) -> Point:
    return Fraction(x), Fraction(y)


@dataclass(frozen=True)
class Polygon:
    """Bounding polygons ABPCD and AB'QC'D of a swarm.

    Only ``Q`` is guaranteed to be a lattice vertex; the remaining corners
    are exact rational points.  Membership tests use the five half-plane
    constants and never touch the corner points.
    """

    y_top: int
    y_bottom: int
    x_min: int
    x_max: int
    c1: int  # min(x + y): bottom l2r slant
    c2: int  # min(y - x): bottom r2l slant

    @property
    def A(self) -> Point:
        return _pt(self.x_min, self.y_top)

    @property
    def D(self) -> Point:
        return _pt(self.x_max, self.y_top)

    @property
    def B(self) -> Point:
        return _pt(self.x_min, self.y_bottom)

    @property
    def C(self) -> Point:
        return _pt(self.x_max, self.y_bottom)

    @property
    def Bp(self) -> Point:
        return _pt(self.x_min, self.c1 - self.x_min)

    @property
    def Cp(self) -> Point:
        return _pt(self.x_max, self.c2 + self.x_max)

    @property
    def P(self) -> Point:
        # x + y = x_min + y_bottom  meets  y - x = y_bottom - x_max
        n = self.x_min + self.y_bottom
        p = self.y_bottom - self.x_max
        return Fraction(n - p, 2), Fraction(n + p, 2)

    @property
    def Q(self) -> Coord:
        return Coord((self.c1 - self.c2) // 2, (self.c1 + self.c2) // 2)

    def corners(self) -> dict[str, Point]:
        q = self.Q
        return {
            "A": self.A,
            "B": self.B,
            "B'": self.Bp,
            "P": self.P,
            "Q": _pt(q.x, q.y),
            "C'": self.Cp,
            "C": self.C,
            "D": self.D,
        }


@dataclass(frozen=True)
class PolygonMetrics:
    h_left: int
    h_right: int
    w: int
    total_depth: int


def bounding_polygon(coords: Iterable[Coord]) -> Polygon:
    coords = list(coords)
    if not coords:
        raise ValueError("empty swarm")
    xs = [c.x for c in coords]
    ys = [c.y for c in coords]
    return Polygon(
        y_top=max(ys),
        y_bottom=min(ys),
        x_min=min(xs),
        x_max=max(xs),
        c1=min(c.x + c.y for c in coords),
        c2=min(c.y - c.x for c in coords),
    )


def predict_gathering_point(coords: Iterable[Coord]) -> Coord:
    return bounding_polygon(coords).Q


def polygon_contains(p: Polygon, c: Coord) -> bool:
    """Membership in the tight polygon AB'QC'D."""
    return (
        c.y <= p.y_top
        and p.x_min <= c.x <= p.x_max
        and c.x + c.y >= p.c1
        and c.y - c.x >= p.c2
    )


def outer_polygon_contains(p: Polygon, c: Coord) -> bool:
    """Membership in the looser pentagon ABPCD (sides AB, BP, PC, CD, DA)."""
    return (
        c.y <= p.y_top
        and p.x_min <= c.x <= p.x_max
        and c.x + c.y >= p.x_min + p.y_bottom
        and c.y - c.x >= p.y_bottom - p.x_max
    )


def polygon_metrics(p: Polygon) -> PolygonMetrics:
    w = p.x_max - p.x_min
    h_left = 0 if w == 0 else p.y_top - (p.c1 - p.x_min)
    return PolygonMetrics(
        h_left=h_left,
        h_right=p.y_top - (p.c2 + p.x_max),
        w=w,
        total_depth=p.y_top - p.Q.y,
    )
