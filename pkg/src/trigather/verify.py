"""Trace monitors and a brute-force reachable-state oracle.

Monitors are pure functions of a trace.  Each replays the trace step by
step (a step is one event for central/async schedulers, one batch for
synchronous/distributed ones) and reports the first violation it sees.
"""
from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterator, Optional

from trigather.engine import Trace, round_boundaries
from trigather.grid import (
    OFFSETS,
    Coord,
    bounding_polygon,
    grid_distance,
    outer_polygon_contains,
    polygon_contains,
    polygon_metrics,
)
from trigather.rules import Algorithm, classify, move_of
from trigather.swarm import GlobalState, connected_vertices, view_at


class TraceError(ValueError):
    pass


class StateGraphError(RuntimeError):
    def __init__(self, message: str, statistics: dict):
        super().__init__(message)
        self.statistics = statistics


@dataclass
class MonitorReport:
    monitor_name: str
    passed: bool = True
    first_violation: Optional[tuple[int, str]] = None
    statistics: dict = field(default_factory=dict)
    informational: bool = False

    def fail(self, index: int, description: str) -> None:
        if self.first_violation is None:
            self.first_violation = (index, description)
        self.passed = False

    @property
    def status(self) -> str:
        if self.informational:
            return "informational"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "status": self.status,
            "firstViolation": None
            if self.first_violation is None
            else {"event": self.first_violation[0], "description": self.first_violation[1]},
            "statistics": self.statistics,
        }


# -- replay -------------------------------------------------------------------


@dataclass
class Step:
    index: int  # step ordinal
    first_event: int
    last_event: int  # inclusive
    moves: list  # (robot_id, from, to)
    robots: list  # positions after the step (shared, do not mutate)
    occupancy: Counter  # after the step (shared, do not mutate)


def validate_trace(trace: Trace) -> None:
    """Structural checks only: ids, sequencing, positions, single-edge moves."""
    n = trace.initial_state.n
    robots = list(trace.initial_state.robots)
    prev_step = -1
    batch_moves: list = []

    def flush():
        for rid, to in batch_moves:
            robots[rid] = to
        batch_moves.clear()

    for k, e in enumerate(trace.events):
        if e.t != k:
            raise TraceError(f"event {k}: t={e.t} out of sequence")
        if not 0 <= e.robot_id < n:
            raise TraceError(f"event {k}: robot id {e.robot_id} out of range")
        if e.step < prev_step:
            raise TraceError(f"event {k}: step index decreases")
        if e.step != prev_step:
            flush()
            prev_step = e.step
        if len(e.view_times) != 6 or any(not 0 <= v <= e.t for v in e.view_times):
            raise TraceError(f"event {k}: view times must lie in [0, t]")
        if tuple(e.from_) != tuple(robots[e.robot_id]):
            raise TraceError(
                f"event {k}: robot {e.robot_id} is at {robots[e.robot_id]}, not {e.from_}"
            )
        if e.to is not None:
            if (e.to.x + e.to.y) % 2 or grid_distance(e.from_, e.to) != 1:
                raise TraceError(f"event {k}: {e.from_} -> {e.to} is not a single edge")
            batch_moves.append((e.robot_id, e.to))
    flush()
    if trace.final_state is not None and Counter(robots) != trace.final_state.occupancy:
        raise TraceError("replaying the events does not reproduce the final state")


def replay(trace: Trace) -> Iterator[Step]:
    """Yield the state after every step of the trace."""
    robots = list(trace.initial_state.robots)
    occ = Counter(robots)
    events = trace.events
    k = 0
    ordinal = 0
    while k < len(events):
        j = k
        while j + 1 < len(events) and events[j + 1].step == events[k].step:
            j += 1
        moves = [(e.robot_id, e.from_, e.to) for e in events[k : j + 1] if e.to is not None]
        for rid, frm, to in moves:
            robots[rid] = to
            occ[frm] -= 1
            if not occ[frm]:
                del occ[frm]
            occ[to] += 1
        yield Step(ordinal, k, j, moves, robots, occ)
        ordinal += 1
        k = j + 1


def _checked(trace: Trace, name: str) -> MonitorReport:
    validate_trace(trace)
    return MonitorReport(name)


# -- monitors -----------------------------------------------------------------


def _ring_connected(occ, center: Coord, extra) -> bool:
    """Occupied neighbours of a vacated vertex form one arc of its 6-ring."""
    ring = [(center.x + 1, center.y + 1), (center.x, center.y + 2), (center.x - 1, center.y + 1),
            (center.x - 1, center.y - 1), (center.x, center.y - 2), (center.x + 1, center.y - 1)]
    marks = [c in occ for c in ring]
    if not any(marks):
        return False
    runs = sum(1 for i in range(6) if marks[i] and not marks[i - 1])
    return runs == 1 or all(marks)


def check_connectivity(trace: Trace) -> MonitorReport:
    rep = _checked(trace, "connectivity")
    if not connected_vertices(trace.initial_state.occupancy):
        rep.fail(-1, "initial state disconnected")
    checks = 0
    for step in replay(trace):
        if not step.moves:
            continue
        checks += 1
        if len(step.moves) == 1:
            _, frm, _ = step.moves[0]
            # a still-occupied source, or a vacated source whose occupied
            # neighbours stay locally linked, cannot disconnect the graph
            if frm in step.occupancy or _ring_connected(step.occupancy, frm, None):
                continue
        if not connected_vertices(step.occupancy):
            rep.fail(step.last_event, f"visibility graph disconnected after step {step.index}")
            break
    rep.statistics["stepsChecked"] = checks
    return rep


def check_polygon(trace: Trace) -> MonitorReport:
    rep = _checked(trace, "polygon")
    poly = bounding_polygon(trace.initial_state.robots)
    outer_ok = True
    for c in trace.initial_state.robots:
        if not polygon_contains(poly, c):
            rep.fail(-1, f"initial robot {c} outside AB'QC'D")
    for step in replay(trace):
        for _, _, to in step.moves:
            if not polygon_contains(poly, to):
                rep.fail(step.last_event, f"robot moved to {to}, outside AB'QC'D")
            if not outer_polygon_contains(poly, to):
                outer_ok = False
                rep.fail(step.last_event, f"robot moved to {to}, outside ABPCD")
        if not rep.passed:
            break
    rep.statistics.update(
        {"c1": poly.c1, "c2": poly.c2, "yTop": poly.y_top, "xMin": poly.x_min,
         "xMax": poly.x_max, "insideOuter": outer_ok}
    )
    return rep


def check_slants(trace: Trace) -> MonitorReport:
    """Bottom slants, hence the predicted gathering point, never change."""
    rep = _checked(trace, "slants")
    init = bounding_polygon(trace.initial_state.robots)
    c1, c2, q = init.c1, init.c2, init.Q
    nkeys = Counter(c.x + c.y for c in trace.initial_state.robots)
    pkeys = Counter(c.y - c.x for c in trace.initial_state.robots)
    states = 0
    for step in replay(trace):
        for _, frm, to in step.moves:
            nkeys[frm.x + frm.y] -= 1
            pkeys[frm.y - frm.x] -= 1
            nkeys[to.x + to.y] += 1
            pkeys[to.y - to.x] += 1
        states += 1
        if step.moves:
            lowest_n = min(c.x + c.y for _, _, c in step.moves)
            lowest_p = min(c.y - c.x for _, _, c in step.moves)
            if lowest_n < c1 or nkeys[c1] <= 0:
                rep.fail(step.last_event, f"bottom l2r slant left x+y={c1}")
            elif lowest_p < c2 or pkeys[c2] <= 0:
                rep.fail(step.last_event, f"bottom r2l slant left y-x={c2}")
            else:
                cur = ((c1 - c2) // 2, (c1 + c2) // 2)
                if cur != q:
                    rep.fail(step.last_event, f"predicted point moved to {cur}")
        if not rep.passed:
            break
    rep.statistics.update({"c1": c1, "c2": c2, "Q": list(q), "statesChecked": states})
    return rep


def check_layers(trace: Trace) -> MonitorReport:
    rep = _checked(trace, "layers")
    xs = Counter(c.x for c in trace.initial_state.robots)
    x_min, x_max = min(xs), max(xs)
    init_min, init_max = x_min, x_max
    for step in replay(trace):
        for _, frm, to in step.moves:
            xs[frm.x] -= 1
            if not xs[frm.x]:
                del xs[frm.x]
            xs[to.x] += 1
        lo, hi = min(xs), max(xs)
        if lo < x_min:
            rep.fail(step.last_event, f"left layer moved left: {x_min} -> {lo}")
            break
        if hi > x_max:
            rep.fail(step.last_event, f"right layer moved right: {x_max} -> {hi}")
            break
        x_min, x_max = lo, hi
    rep.statistics.update(
        {"xMinInitial": init_min, "xMaxInitial": init_max, "xMinFinal": x_min, "xMaxFinal": x_max}
    )
    return rep


def check_round_progress(trace: Trace) -> MonitorReport:
    """The top layer drops by at least one doubled unit in every completed round."""
    rep = _checked(trace, "round_progress")
    rep.informational = not trace.config.scheduler.fresh_view
    n = trace.initial_state.n
    ends = set(round_boundaries(trace.events, n))
    ys = Counter(c.y for c in trace.initial_state.robots)
    y_top = max(ys)
    round_start_top = y_top
    gathered_at_start = len(trace.initial_state.occupancy) == 1
    drops = []
    stalls = 0
    for step in replay(trace):
        for _, frm, to in step.moves:
            ys[frm.y] -= 1
            if not ys[frm.y]:
                del ys[frm.y]
            ys[to.y] += 1
        if step.last_event + 1 in ends:
            y_top = max(ys)
            if not gathered_at_start:
                drops.append(round_start_top - y_top)
                if y_top > round_start_top - 1:
                    stalls += 1
                    if not rep.informational:
                        rep.fail(step.last_event, f"top layer stayed at y={y_top} for a round")
            round_start_top = y_top
            gathered_at_start = len(step.occupancy) == 1
    rep.statistics.update(
        {"roundsChecked": len(drops), "minDrop": min(drops) if drops else None, "stalls": stalls}
    )
    return rep


def check_convergence(trace: Trace, n: Optional[int] = None) -> MonitorReport:
    rep = _checked(trace, "convergence")
    n = trace.initial_state.n if n is None else n
    poly = bounding_polygon(trace.initial_state.robots)
    q = poly.Q
    depth = polygon_metrics(poly).total_depth
    fresh = trace.config.scheduler.fresh_view
    rep.statistics.update(
        {"rounds": trace.rounds, "budget": 2 * n, "roundsOverN": trace.rounds / n,
         "roundsOver2N": trace.rounds / (2 * n), "totalDepth": depth, "Q": list(q),
         "roundBoundAsserted": fresh}
    )
    if trace.outcome.value != "gathered":
        rep.fail(len(trace.events) - 1, f"outcome {trace.outcome.value}")
    final = set(trace.final_state.robots)
    if final != {q}:
        rep.fail(len(trace.events) - 1, f"final positions {sorted(final)} != Q {q}")
    if depth > 2 * n:
        rep.fail(-1, f"polygon depth {depth} exceeds 2n = {2 * n}")
    if fresh and trace.rounds > 2 * n:
        rep.fail(len(trace.events) - 1, f"{trace.rounds} rounds exceed 2n = {2 * n}")
    if fresh and trace.rounds > 2.5 * (n + 1):
        rep.fail(len(trace.events) - 1, f"{trace.rounds} rounds exceed 2.5(n+1)")
    return rep


def check_potential(trace: Trace) -> MonitorReport:
    """Sum of heights above Q never rises and falls at every move."""
    rep = _checked(trace, "potential")
    qy = bounding_polygon(trace.initial_state.robots).Q.y
    phi = sum(c.y - qy for c in trace.initial_state.robots)
    start = phi
    for step in replay(trace):
        for rid, frm, to in step.moves:
            if to.y >= frm.y:
                rep.fail(step.last_event, f"robot {rid} moved {frm} -> {to} without descending")
            phi += to.y - frm.y
        if phi < 0:
            rep.fail(step.last_event, "robots below the gathering point")
        if not rep.passed:
            break
    rep.statistics.update({"initial": start, "final": phi})
    return rep


def check_rule_consistency(trace: Trace) -> MonitorReport:
    """Each event's classification follows its view; fresh schedulers saw the true state."""
    rep = _checked(trace, "rule_consistency")
    alg = trace.config.algorithm
    fresh = trace.config.scheduler.fresh_view
    occ = Counter(trace.initial_state.robots)
    events = trace.events
    steps = replay(trace)
    for k, e in enumerate(events):
        if classify(e.view_used, alg) is not e.classification:
            rep.fail(k, f"view {e.view_used} classifies as {classify(e.view_used, alg).value}")
            break
        d = move_of(e.classification)
        expected = None if d is None else Coord(e.from_.x + d.dx, e.from_.y + d.dy)
        if expected != e.to:
            rep.fail(k, f"classification {e.classification.value} does not move to {e.to}")
            break
        if fresh and view_at(occ, e.from_) != e.view_used:
            rep.fail(k, f"view {e.view_used} is not the fresh view at {e.from_}")
            break
        if k + 1 == len(events) or events[k + 1].step != e.step:
            occ = Counter(next(steps).occupancy)
    return rep


MONITORS = (
    check_connectivity,
    check_polygon,
    check_slants,
    check_layers,
    check_round_progress,
    check_convergence,
    check_potential,
    check_rule_consistency,
)


def verify_trace(trace: Trace) -> list[MonitorReport]:
    validate_trace(trace)
    return [m(trace) for m in MONITORS]


# -- reachable-state oracle -------------------------------------------------------

Key = tuple  # sorted tuple of Coord


def canonical(robots) -> Key:
    return tuple(sorted(Coord(*c) for c in robots))


def enabled_moves(key: Key, algorithm: Algorithm) -> list[tuple[Coord, Coord]]:
    """``(source vertex, destination)`` for every distinct enabled vertex."""
    occ = Counter(key)
    out = []
    for c in occ:
        d = move_of(classify(view_at(occ, c), algorithm))
        if d is not None:
            out.append((c, Coord(c.x + d.dx, c.y + d.dy)))
    return out


def _successor(key: Key, src: Coord, dst: Coord) -> Key:
    robots = list(key)
    robots.remove(src)
    robots.append(dst)
    return tuple(sorted(robots))


@dataclass
class StateGraph:
    algorithm: Algorithm
    initial: Key
    succ: dict = field(default_factory=dict)  # key -> [(src vertex, dst key)]

    @property
    def nodes(self):
        return self.succ.keys()

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.succ.values())

    def edges(self):
        for s, outs in self.succ.items():
            for src, t in outs:
                yield s, src, t


def build_state_graph(
    initial, algorithm: Algorithm, max_nodes: int = 10**6, max_n: int = 4
) -> StateGraph:
    """Exhaustive BFS over single-robot fresh-view moves.

    Co-located robots see the same view and move identically, so one edge
    per distinct enabled vertex covers every robot-level transition.
    """
    robots = initial.robots if isinstance(initial, GlobalState) else tuple(initial)
    if len(robots) > max_n:
        raise ValueError(f"{len(robots)} robots exceed the enumeration cap of {max_n}")
    algorithm = Algorithm(algorithm)
    start = canonical(robots)
    g = StateGraph(algorithm, start)
    frontier = [start]
    g.succ[start] = None
    while frontier:
        nxt = []
        for key in frontier:
            outs = []
            for src, dst in enabled_moves(key, algorithm):
                t = _successor(key, src, dst)
                outs.append((src, t))
                if t not in g.succ:
                    if len(g.succ) >= max_nodes:
                        raise StateGraphError(
                            f"node cap {max_nodes} exceeded",
                            {"nodes": len(g.succ), "frontier": len(frontier)},
                        )
                    g.succ[t] = None
                    nxt.append(t)
            g.succ[key] = outs
        frontier = nxt
    return g


def _adjacent(a: Coord, b: Coord) -> bool:
    return (b.x - a.x, b.y - a.y) in OFFSETS


def check_lattice_linearity(graph: StateGraph, algorithm: Optional[Algorithm] = None) -> MonitorReport:
    """Deadlock freedom, enabledness persistence, and a unique sink at Q.

    Persistence: if the robots at vertex ``p`` are enabled in ``s``, they stay
    enabled in every state reachable from ``s`` by moves of other robots
    (a robot co-located at ``p`` counts as "other" while one remains).
    """
    algorithm = Algorithm(algorithm or graph.algorithm)
    rep = MonitorReport("lattice_linearity")
    q = bounding_polygon(graph.initial).Q
    memo: dict = {}

    def enabled_at(key: Key, p: Coord) -> bool:
        occ = Counter(key)
        return p in occ and move_of(classify(view_at(occ, p), algorithm)) is not None

    def persists(key: Key, p: Coord) -> bool:
        k = (key, p)
        if k in memo:
            return memo[k]
        ok = enabled_at(key, p)
        if ok:
            mult = key.count(p)
            for src, t in graph.succ[key]:
                if (src != p or mult >= 2) and not persists(t, p):
                    ok = False
                    break
        memo[k] = ok
        return ok

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10_000))
    checked = 0
    sinks = 0
    try:
        for key, outs in graph.succ.items():
            gathered = len(set(key)) == 1
            if not outs:
                sinks += 1
                if not gathered:
                    rep.fail(0, f"deadlock: {list(map(list, key))} is silent but not gathered")
                elif key[0] != q:
                    rep.fail(0, f"gathered at {key[0]}, not Q={q}")
            for src, _ in outs:
                checked += 1
                if not persists(key, src):
                    rep.fail(0, f"robot at {src} loses enabledness from {list(map(list, key))}")
            if algorithm is Algorithm.REVISED:
                srcs = [src for src, _ in outs]
                for i, a in enumerate(srcs):
                    if any(_adjacent(a, b) for b in srcs[i + 1 :]):
                        rep.fail(0, f"adjacent enabled robots in {list(map(list, key))}")
            if not rep.passed:
                break
    finally:
        sys.setrecursionlimit(limit)
    rep.statistics.update(
        {"states": len(graph.succ), "edges": graph.edge_count, "sinks": sinks,
         "persistenceChecks": checked, "Q": list(q)}
    )
    return rep


def check_stale_equivalence(graph: StateGraph, trace: Trace) -> MonitorReport:
    """Every state visited by the trace is fresh-reachable from its start."""
    rep = _checked(trace, "stale_equivalence")
    if canonical(trace.initial_state.robots) != graph.initial:
        raise ValueError("state graph was built for a different initial state")
    visited = 1
    for step in replay(trace):
        if not step.moves:
            continue
        visited += 1
        key = canonical(step.robots)
        if key not in graph.succ:
            rep.fail(step.last_event, f"state {list(map(list, key))} is not fresh-reachable")
            break
    rep.statistics["statesVisited"] = visited
    return rep


def enumerate_configurations(max_n: int, radius: int, multisets: bool = True) -> list[Key]:
    """Connected placements of 1..max_n robots, up to translation.

    Supports are connected vertex sets lying within ``radius`` of one of
    their own vertices; with ``multisets`` every way of stacking up to
    ``max_n`` robots on each support is included.
    """
    origin = Coord(0, 0)
    ball = {
        Coord(x, y)
        for x in range(-radius, radius + 1)
        for y in range(-2 * radius, 2 * radius + 1)
        if (x + y) % 2 == 0 and grid_distance(origin, Coord(x, y)) <= radius
    }

    def normalize(cells) -> tuple:
        m = min(cells)
        return tuple(sorted(Coord(c.x - m.x, c.y - m.y) for c in cells))

    shapes = {normalize([origin])}
    layer = {frozenset([origin])}
    for _ in range(max_n - 1):
        grown = set()
        for cells in layer:
            for c in cells:
                for dx, dy in OFFSETS:
                    nb = Coord(c.x + dx, c.y + dy)
                    if nb in ball and nb not in cells:
                        grown.add(cells | {nb})
        layer = grown
        shapes.update(normalize(s) for s in layer)
    result = []
    for shape in sorted(shapes, key=lambda s: (len(s), s)):
        if not multisets:
            result.append(shape)
            continue
        for total in range(len(shape), max_n + 1):
            for extra in combinations_with_replacement(shape, total - len(shape)):
                result.append(tuple(sorted(shape + extra)))
    return result
