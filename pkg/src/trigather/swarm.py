"""Global state of a swarm: a multiset of lattice vertices."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from trigather.grid import OFFSETS, Coord, Direction, is_vertex, mirror_coord
from trigather.rules import View


class SwarmError(ValueError):
    pass


@dataclass(frozen=True)
class GlobalState:
    """Robot positions indexed by internal id.

    Ids exist only for trace attribution; the movement rules never see them.
    """

    robots: tuple[Coord, ...]

    def __post_init__(self):
        robots = tuple(Coord(int(x), int(y)) for x, y in self.robots)
        if not robots:
            raise SwarmError("empty swarm")
        for c in robots:
            if not is_vertex(c):
                raise SwarmError(f"{c} is not a lattice vertex (x+y must be even)")
        object.__setattr__(self, "robots", robots)

    @classmethod
    def of(cls, coords: Iterable) -> "GlobalState":
        return cls(tuple(coords))

    @property
    def n(self) -> int:
        return len(self.robots)

    @cached_property
    def occupancy(self) -> Counter:
        return Counter(self.robots)

    def canonical(self) -> tuple[Coord, ...]:
        """Sorted multiset; robot identity quotiented out."""
        return tuple(sorted(self.robots))

    def same_multiset(self, other: "GlobalState") -> bool:
        return self.occupancy == other.occupancy


@dataclass
class VisibilityGraph:
    vertices: set[Coord]
    edges: set[tuple[Coord, Coord]] = field(default_factory=set)


def occupied(state: GlobalState, c: Coord) -> bool:
    return state.occupancy.get(c, 0) > 0


def view_at(occ, c: Coord) -> View:
    """Occupancy view of vertex ``c`` given any mapping ``Coord -> count``."""
    x, y = c
    return View(*(occ.get((x + dx, y + dy), 0) > 0 for dx, dy in OFFSETS))


def neighborhood_view(state: GlobalState, c: Coord) -> View:
    return view_at(state.occupancy, c)


def visibility_graph(state: GlobalState) -> VisibilityGraph:
    occ = state.occupancy
    g = VisibilityGraph(vertices=set(occ))
    for c in occ:
        for dx, dy in OFFSETS:
            other = Coord(c.x + dx, c.y + dy)
            if other in occ and c < other:
                g.edges.add((c, other))
    return g


def connected_vertices(vertices) -> bool:
    """True iff the set of occupied vertices induces a connected subgraph."""
    verts = set(vertices)
    if not verts:
        return True
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in OFFSETS:
            nb = (x + dx, y + dy)
            if nb in verts and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(verts)


def is_connected(state: GlobalState) -> bool:
    return connected_vertices(state.occupancy)


def is_gathered(state: GlobalState) -> bool:
    return len(state.occupancy) == 1


def extents(state: GlobalState) -> tuple[int, int, int, int]:
    """Return ``(y_top, y_bottom, x_min, x_max)``."""
    xs = [c.x for c in state.robots]
    ys = [c.y for c in state.robots]
    return max(ys), min(ys), min(xs), max(xs)


def apply_move(state: GlobalState, robot_id: int, d: Direction) -> GlobalState:
    if not 0 <= robot_id < state.n:
        raise SwarmError(f"invalid robot id {robot_id} for swarm of {state.n}")
    robots = list(state.robots)
    c = robots[robot_id]
    robots[robot_id] = Coord(c.x + d.dx, c.y + d.dy)
    return GlobalState(tuple(robots))


def mirror_state(state: GlobalState, axis_x: int = 0) -> GlobalState:
    return GlobalState(tuple(mirror_coord(c, axis_x) for c in state.robots))


def translate(state: GlobalState, dx: int, dy: int) -> GlobalState:
    if (dx + dy) % 2:
        raise SwarmError("translation must preserve vertex parity")
    return GlobalState(tuple(Coord(c.x + dx, c.y + dy) for c in state.robots))

