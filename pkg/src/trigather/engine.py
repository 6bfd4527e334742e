"""Scheduler engine: runs a swarm to silence and records a replayable trace.

Four activation models are supported:

``synchronous``
    every robot evaluates the same pre-step state; enabled robots move as a batch.
``central``
    one robot per event, in shuffled round-robin epochs, on fresh views.
``distributed``
    each robot independently selected with a fixed probability; selected
    robots evaluate the same pre-step state and move as a batch.
``async-stale``
    one robot per event, same epochs as ``central``, but the view is built
    from stale reads.  Read times are drawn uniformly from
    ``[lower_bound, t]`` where the lower bound is the robot's last snapshot,
    floored by the staleness window.  Under the ``per-robot`` view model every
    other robot's position is read at its own time; under ``per-slot`` each of
    the six slots' occupancy is read at its own time, which can show a
    neighbour in no slot at all (or in two).  ``per-slot`` is a stress mode;
    it is known to break connectivity.

Event time ``t`` names the state *before* event ``t`` is applied.  Batched
events all read the state at the start of their step.
"""
from __future__ import annotations

import bisect
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from trigather.grid import OFFSETS, Coord
from trigather.rng import rng_stream
from trigather.rules import Algorithm, Classification, View, classify, move_of
from trigather.swarm import GlobalState, is_connected, view_at

TRACE_FORMAT = "trigather-trace/1"


class Scheduler(str, enum.Enum):
    SYNCHRONOUS = "synchronous"
    CENTRAL = "central"
    DISTRIBUTED = "distributed"
    ASYNC_STALE = "async-stale"

    @property
    def fresh_view(self) -> bool:
        return self is not Scheduler.ASYNC_STALE


class RefreshPolicy(str, enum.Enum):
    ON_MOVE = "on-move"
    ON_EVALUATE = "on-evaluate"


class ViewModel(str, enum.Enum):
    PER_ROBOT = "per-robot"
    PER_SLOT = "per-slot"


class Outcome(str, enum.Enum):
    GATHERED = "gathered"
    STEP_CAP = "step-cap"
    STUCK = "stuck"


class RunError(ValueError):
    pass


def default_step_cap(n: int) -> int:
    # 2n rounds x n activations per round x 32 for stale-view stutter
    return 64 * n * (2 * n + 1)


@dataclass(frozen=True)
class RunConfig:
    algorithm: Algorithm = Algorithm.GSGS
    scheduler: Scheduler = Scheduler.SYNCHRONOUS
    seed: int = 0
    max_staleness: Optional[int] = None  # None: unbounded
    refresh_policy: RefreshPolicy = RefreshPolicy.ON_EVALUATE
    max_steps: Optional[int] = None  # None: default_step_cap(n)
    distributed_select_prob: float = 0.5
    view_model: ViewModel = ViewModel.PER_ROBOT

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "view_model", ViewModel(self.view_model))
        object.__setattr__(self, "scheduler", Scheduler(self.scheduler))
        object.__setattr__(self, "refresh_policy", RefreshPolicy(self.refresh_policy))
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("maxSteps must be >= 1")
        if self.max_staleness is not None and self.max_staleness < 0:
            raise ValueError("maxStaleness must be nonnegative")
        if not 0.0 < self.distributed_select_prob <= 1.0:
            raise ValueError("distributedSelectProb must lie in (0, 1]")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "scheduler": self.scheduler.value,
            "seed": self.seed,
            "maxStaleness": self.max_staleness,
            "refreshPolicy": self.refresh_policy.value,
            "maxSteps": self.max_steps,
            "distributedSelectProb": self.distributed_select_prob,
            "viewModel": self.view_model.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            algorithm=d["algorithm"],
            scheduler=d["scheduler"],
            seed=d["seed"],
            max_staleness=d.get("maxStaleness"),
            refresh_policy=d.get("refreshPolicy", RefreshPolicy.ON_EVALUATE.value),
            max_steps=d.get("maxSteps"),
            distributed_select_prob=d.get("distributedSelectProb", 0.5),
            view_model=d.get("viewModel", ViewModel.PER_ROBOT.value),
        )


@dataclass
class TraceEvent:
    t: int
    robot_id: int
    view_used: View
    view_times: tuple[int, ...]
    classification: Classification
    from_: Coord
    to: Optional[Coord]
    round_index: int
    step: int

    @property
    def moved(self) -> bool:
        return self.to is not None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "robotId": self.robot_id,
            "viewUsed": [int(b) for b in self.view_used],
            "viewTimes": list(self.view_times),
            "classification": self.classification.value,
            "from": list(self.from_),
            "to": None if self.to is None else list(self.to),
            "roundIndex": self.round_index,
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        return cls(
            t=d["t"],
            robot_id=d["robotId"],
            view_used=View(*(bool(b) for b in d["viewUsed"])),
            view_times=tuple(d["viewTimes"]),
            classification=Classification(d["classification"]),
            from_=Coord(*d["from"]),
            to=None if d["to"] is None else Coord(*d["to"]),
            round_index=d["roundIndex"],
            step=d.get("step", d["t"]),
        )


@dataclass
class Trace:
    config: RunConfig
    initial_state: GlobalState
    events: list[TraceEvent] = field(default_factory=list)
    final_state: Optional[GlobalState] = None
    rounds: int = 0
    outcome: Outcome = Outcome.STUCK

    @property
    def n(self) -> int:
        return self.initial_state.n

    @property
    def moves(self) -> int:
        return sum(1 for e in self.events if e.to is not None)

    def dumps(self) -> str:
        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    def write(self, fh) -> None:
        header = {
            "format": TRACE_FORMAT,
            "config": self.config.to_dict(),
            "initialState": [list(c) for c in self.initial_state.robots],
        }
        fh.write(_dumps(header) + "\n")
        for e in self.events:
            fh.write(_dumps(e.to_dict()) + "\n")
        footer = {
            "finalState": [list(c) for c in self.final_state.robots],
            "rounds": self.rounds,
            "outcome": self.outcome.value,
        }
        fh.write(_dumps(footer) + "\n")

    @classmethod
    def loads(cls, text: str) -> "Trace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise RunError("malformed trace: need a header and a footer line")
        try:
            header = json.loads(lines[0])
            footer = json.loads(lines[-1])
            if header.get("format") != TRACE_FORMAT:
                raise RunError(f"malformed trace: format must be {TRACE_FORMAT!r}")
            return cls(
                config=RunConfig.from_dict(header["config"]),
                initial_state=GlobalState(tuple(Coord(*c) for c in header["initialState"])),
                events=[TraceEvent.from_dict(json.loads(ln)) for ln in lines[1:-1]],
                final_state=GlobalState(tuple(Coord(*c) for c in footer["finalState"])),
                rounds=footer["rounds"],
                outcome=Outcome(footer["outcome"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RunError):
                raise
            raise RunError(f"malformed trace: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def round_boundaries(events: Iterable, n: Optional[int] = None) -> list[int]:
    """Greedy cover of the activation sequence into rounds.

    Returns the exclusive end index of every *completed* round.  Events may
    be ``TraceEvent`` objects or bare robot ids; for events carrying a
    ``step``, a round closes only at the end of the step that completed the
    cover, so a batch is never split across rounds.
    """
    events = list(events)
    ids = [e if isinstance(e, int) else e.robot_id for e in events]
    steps = [i if isinstance(e, int) else e.step for i, e in enumerate(events)]
    if n is None:
        n = len(set(ids))
    ends = []
    covered: set[int] = set()
    for k, rid in enumerate(ids):
        covered.add(rid)
        step_ends = k + 1 == len(ids) or steps[k + 1] != steps[k]
        if len(covered) >= n and step_ends:
            ends.append(k + 1)
            covered = set()
    return ends


def count_rounds(events, n: int) -> int:
    """Completed rounds plus a trailing partial one, if any."""
    events = list(events)
    ends = round_boundaries(events, n)
    last = ends[-1] if ends else 0
    return len(ends) + (1 if last < len(events) else 0)


class _Occupancy:
    """Mutable occupancy map with a per-vertex change history."""

    def __init__(self, robots: Iterable[Coord], keep_history: bool):
        self.count: Counter = Counter(robots)
        self.keep_history = keep_history
        self.times: dict[Coord, list[int]] = {}
        self.values: dict[Coord, list[int]] = {}
        if keep_history:
            for c, k in self.count.items():
                self.times[c] = [0]
                self.values[c] = [k]

    def shift(self, c: Coord, delta: int, stamp: int) -> None:
        k = self.count[c] + delta
        if k:
            self.count[c] = k
        else:
            del self.count[c]
        if self.keep_history:
            times = self.times.setdefault(c, [0])
            values = self.values.setdefault(c, [0])
            if times[-1] == stamp:
                values[-1] = k
            else:
                times.append(stamp)
                values.append(k)

    def at_time(self, c: Coord, tau: int) -> int:
        times = self.times.get(c)
        if times is None:
            return 0
        i = bisect.bisect_right(times, tau) - 1
        return self.values[c][i] if i >= 0 else 0


class _EpochOrder:
    """Shuffled round-robin: every robot once per ``n`` consecutive activations."""

    def __init__(self, n: int, rng):
        self.n = n
        self.rng = rng
        self.queue: list[int] = []

    def next(self) -> int:
        if not self.queue:
            self.queue = list(range(self.n))
            self.rng.shuffle(self.queue)
            self.queue.reverse()
        return self.queue.pop()


class _Run:
    def __init__(self, state: GlobalState, cfg: RunConfig):
        self.cfg = cfg
        self.n = state.n
        self.robots = list(state.robots)
        self.occ = _Occupancy(
            self.robots,
            keep_history=cfg.scheduler is Scheduler.ASYNC_STALE
            and cfg.view_model is ViewModel.PER_SLOT,
        )
        self.moves = [move_of(classify(View.from_bits(b), cfg.algorithm)) for b in range(64)]
        self.classes = [classify(View.from_bits(b), cfg.algorithm) for b in range(64)]
        self.enabled: set[Coord] = {c for c in self.occ.count if self._fresh_enabled(c)}
        self.events: list[TraceEvent] = []
        self.t = 0
        self.step = 0
        self.round_index = 0
        self.covered: set[int] = set()
        self.sched_rng = rng_stream(cfg.seed, "scheduler")
        self.view_rng = rng_stream(cfg.seed, "view")
        self.last_snapshot = [0] * self.n
        # per-robot position history: change times and positions
        self.pos_times = [[0] for _ in range(self.n)]
        self.pos_values = [[c] for c in self.robots]

    def _fresh_view(self, c: Coord) -> View:
        return view_at(self.occ.count, c)

    def _fresh_enabled(self, c: Coord) -> bool:
        return self.moves[self._fresh_view(c).bits] is not None

    def _refresh_enabled(self, touched: Iterable[Coord]) -> None:
        for c in touched:
            if c in self.occ.count and self._fresh_enabled(c):
                self.enabled.add(c)
            else:
                self.enabled.discard(c)

    def _record(self, rid: int, view: View, times, frm: Coord) -> Optional[Coord]:
        cls = self.classes[view.bits]
        d = move_of(cls)
        to = None if d is None else Coord(frm.x + d.dx, frm.y + d.dy)
        self.events.append(
            TraceEvent(
                t=self.t,
                robot_id=rid,
                view_used=view,
                view_times=tuple(times),
                classification=cls,
                from_=frm,
                to=to,
                round_index=self.round_index,
                step=self.step,
            )
        )
        self.covered.add(rid)
        self.t += 1
        return to

    def _apply(self, moves: list[tuple[int, Coord]]) -> None:
        touched = set()
        for rid, to in moves:
            frm = self.robots[rid]
            self.robots[rid] = to
            self.pos_times[rid].append(self.t)
            self.pos_values[rid].append(to)
            self.occ.shift(frm, -1, self.t)
            self.occ.shift(to, +1, self.t)
            for c in (frm, to):
                touched.add(c)
                touched.update((c.x + dx, c.y + dy) for dx, dy in OFFSETS)
        self._refresh_enabled(Coord(*c) for c in touched)

    def _end_step(self) -> None:
        self.step += 1
        if len(self.covered) >= self.n:
            self.round_index += 1
            self.covered = set()

    # -- schedulers ---------------------------------------------------------

    def _batch(self, ids: list[int]) -> None:
        t0 = self.t
        pending = []
        for rid in ids:
            frm = self.robots[rid]
            to = self._record(rid, self._fresh_view(frm), (t0,) * 6, frm)
            if to is not None:
                pending.append((rid, to))
        self._apply(pending)

    def step_synchronous(self) -> None:
        self._batch(list(range(self.n)))

    def step_distributed(self) -> None:
        p = self.cfg.distributed_select_prob
        while True:
            ids = [i for i in range(self.n) if self.sched_rng.random() < p]
            if any(self.robots[i] in self.enabled for i in ids):
                break
        self._batch(ids)

    def step_central(self, order: _EpochOrder) -> None:
        rid = order.next()
        frm = self.robots[rid]
        to = self._record(rid, self._fresh_view(frm), (self.t,) * 6, frm)
        if to is not None:
            self._apply([(rid, to)])

    def _stale_view_per_slot(self, frm: Coord, lo: int, t: int):
        times = []
        bits = []
        for dx, dy in OFFSETS:
            tau = self.view_rng.randint(lo, t)
            times.append(tau)
            bits.append(self.occ.at_time(Coord(frm.x + dx, frm.y + dy), tau) > 0)
        return View(*bits), times

    def _stale_view_per_robot(self, rid: int, frm: Coord, lo: int, t: int):
        slots = {(frm.x + dx, frm.y + dy): k for k, (dx, dy) in enumerate(OFFSETS)}
        bits = [False] * 6
        # occupied slot: latest read that placed a robot there; empty slot: lo
        times = [lo] * 6
        for j in range(self.n):
            if j == rid:
                continue
            tau = self.view_rng.randint(lo, t)
            ts = self.pos_times[j]
            pos = self.pos_values[j][bisect.bisect_right(ts, tau) - 1]
            k = slots.get(pos)
            if k is not None:
                bits[k] = True
                times[k] = max(times[k], tau)
        return View(*bits), times

    def step_async(self, order: _EpochOrder) -> None:
        rid = order.next()
        t = self.t
        lo = self.last_snapshot[rid]
        if self.cfg.max_staleness is not None:
            lo = max(lo, t - self.cfg.max_staleness)
        lo = min(lo, t)
        frm = self.robots[rid]
        if self.cfg.view_model is ViewModel.PER_SLOT:
            view, times = self._stale_view_per_slot(frm, lo, t)
        else:
            view, times = self._stale_view_per_robot(rid, frm, lo, t)
        to = self._record(rid, view, times, frm)
        if to is not None:
            self._apply([(rid, to)])
        if to is not None or self.cfg.refresh_policy is RefreshPolicy.ON_EVALUATE:
            self.last_snapshot[rid] = self.t

    def execute(self, cap: int) -> Outcome:
        sched = self.cfg.scheduler
        order = _EpochOrder(self.n, self.sched_rng)
        while self.enabled:
            if self.step >= cap:
                return Outcome.STEP_CAP
            if sched is Scheduler.SYNCHRONOUS:
                self.step_synchronous()
            elif sched is Scheduler.DISTRIBUTED:
                self.step_distributed()
            elif sched is Scheduler.CENTRAL:
                self.step_central(order)
            else:
                self.step_async(order)
            self._end_step()
        return Outcome.GATHERED if len(self.occ.count) == 1 else Outcome.STUCK


def run(state: GlobalState, cfg: RunConfig) -> Trace:
    if state.n < 1:
        raise RunError("empty swarm")
    if not is_connected(state):
        raise RunError("initial visibility graph is disconnected")
    cap = cfg.max_steps if cfg.max_steps is not None else default_step_cap(state.n)
    sim = _Run(state, cfg)
    outcome = sim.execute(cap)
    final = GlobalState(tuple(sim.robots))
    return Trace(
        config=cfg,
        initial_state=state,
        events=sim.events,
        final_state=final,
        rounds=count_rounds(sim.events, state.n),
        outcome=outcome,
    )


def silent_check(state: GlobalState, algorithm: Algorithm) -> bool:
    """No robot is move-enabled on its fresh view."""
    occ = state.occupancy
    return all(move_of(classify(view_at(occ, c), algorithm)) is None for c in occ)


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, seed=seed)
