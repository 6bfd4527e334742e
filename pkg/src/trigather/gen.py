"""Instance fixtures, random connected swarms, and the state file format."""
from __future__ import annotations

import json
from dataclasses import dataclass

from trigather.grid import OFFSETS, Coord, is_vertex
from trigather.rng import rng_stream
from trigather.swarm import GlobalState, SwarmError

STATE_FORMAT = "trigather-state/1"

# The 29-robot reference swarm (figure x and y both scaled by 2).
FIGURE1_COORDS = (
    (0, -2), (0, -4), (1, -5), (1, -7), (1, -11), (2, -4), (2, -12), (3, -3),
    (3, -5), (3, -13), (4, -2), (4, -6), (4, -8), (4, -12), (5, -1), (5, -9),
    (5, -11), (5, -13), (6, -2), (6, -10), (7, -3), (7, -11), (8, -2), (8, -10),
    (8, -12), (9, -1), (9, -9), (9, -13), (10, -2),
)


def figure1_instance() -> GlobalState:
    return GlobalState(tuple(Coord(x, y) for x, y in FIGURE1_COORDS))


@dataclass(frozen=True)
class GenSpec:
    n: int
    seed: int = 0
    allow_multiplicity: bool = False
    spread: float = 0.0  # 0: uniform growth; 1: always extend the newest robot

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.spread <= 1.0:
            raise ValueError("spread must lie in [0, 1]")


def random_connected(spec: GenSpec) -> GlobalState:
    """Grow a connected swarm from the origin, one robot at a time.

    Each new robot lands on a free neighbour of an occupied vertex.  With
    probability ``spread`` that vertex is the most recently placed robot
    that still has a free neighbour, which favours long thin swarms.
    """
    rng = rng_stream(spec.seed, "gen", spec.n)
    robots = [Coord(0, 0)]
    occupied = {Coord(0, 0)}
    order = [Coord(0, 0)]  # distinct vertices in placement order

    def free_neighbors(c: Coord) -> list[Coord]:
        return [Coord(c.x + dx, c.y + dy) for dx, dy in OFFSETS
                if (c.x + dx, c.y + dy) not in occupied]

    while len(robots) < spec.n:
        if spec.allow_multiplicity and rng.random() < 0.1:
            robots.append(rng.choice(robots))
            continue
        if spec.spread > 0 and rng.random() < spec.spread:
            base = next(c for c in reversed(order) if free_neighbors(c))
        else:
            base = rng.choice(order)
            while not free_neighbors(base):
                base = rng.choice(order)
        free = free_neighbors(base)
        c = free[rng.below(len(free))]
        robots.append(c)
        occupied.add(c)
        order.append(c)
    return GlobalState(tuple(robots))


class StateFormatError(ValueError):
    pass


def parse_state(document: str) -> GlobalState:
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"not a JSON document: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != STATE_FORMAT:
        raise StateFormatError(f"format field must be {STATE_FORMAT!r}")
    coords = obj.get("coords")
    if not isinstance(coords, list):
        raise StateFormatError("coords must be a list of [x, y] pairs")
    if not coords:
        raise StateFormatError("empty swarm")
    robots = []
    for pair in coords:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in pair)
        ):
            raise StateFormatError(f"malformed coordinate {pair!r}")
        c = Coord(*pair)
        if not is_vertex(c):
            raise StateFormatError(f"parity error: {list(c)} has odd x+y")
        robots.append(c)
    try:
        return GlobalState(tuple(robots))
    except SwarmError as exc:
        raise StateFormatError(str(exc)) from exc


def serialize_state(state: GlobalState) -> str:
    return json.dumps(
        {"format": STATE_FORMAT, "coords": [list(c) for c in state.robots]},
        separators=(",", ":"),
    ) + "\n"
