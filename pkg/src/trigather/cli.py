"""Command-line entry point: ``trigather <command> ...``.

Summaries go to stdout as JSON (``predict`` prints a short text report);
diagnostics go to stderr.  Exit status is 0 iff every requested check
passed, 1 on a failed check or run, 2 on unusable input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from trigather.engine import (
    Outcome,
    RefreshPolicy,
    RunConfig,
    RunError,
    Scheduler,
    Trace,
    ViewModel,
    run,
)
from trigather.gen import (
    GenSpec,
    StateFormatError,
    figure1_instance,
    parse_state,
    random_connected,
    serialize_state,
)
from trigather.grid import bounding_polygon, polygon_metrics
from trigather.render import render_trace
from trigather.rng import derive_seed, rng_stream
from trigather.rules import Algorithm
from trigather.swarm import is_connected
from trigather.verify import (
    StateGraphError,
    TraceError,
    build_state_graph,
    check_lattice_linearity,
    enumerate_configurations,
    verify_trace,
)

log = logging.getLogger("trigather")

SCHEDULER_FLAGS = {
    "sync": Scheduler.SYNCHRONOUS,
    "central": Scheduler.CENTRAL,
    "dist": Scheduler.DISTRIBUTED,
    "async": Scheduler.ASYNC_STALE,
}
REFRESH_FLAGS = {"move": RefreshPolicy.ON_MOVE, "eval": RefreshPolicy.ON_EVALUATE}
VIEW_MODEL_FLAGS = {"robot": ViewModel.PER_ROBOT, "slot": ViewModel.PER_SLOT}


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _load_state(path):
    try:
        return parse_state(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except StateFormatError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_trace(path) -> Trace:
    try:
        return Trace.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except RunError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _staleness(text: str):
    if text in ("inf", "unbounded"):
        return None
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("staleness must be >= 0 or 'inf'")
    return value


def _fmt_point(p) -> str:
    return "(" + ",".join(str(v) for v in p) + ")"


# -- commands -------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.figure1:
        state = figure1_instance()
    else:
        if args.n is None:
            raise UsageError("gen needs --figure1 or --n")
        state = random_connected(
            GenSpec(args.n, args.seed, allow_multiplicity=args.multiplicity, spread=args.spread)
        )
    text = serialize_state(state)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_predict(args) -> int:
    state = _load_state(args.state)
    if not is_connected(state):
        log.warning("visibility graph is disconnected; a run on this state would be refused")
    poly = bounding_polygon(state.robots)
    m = polygon_metrics(poly)
    q = poly.Q
    print(f"Q = ({q.x},{q.y}), budget = {2 * state.n} rounds")
    print("corners: " + " ".join(f"{k}={_fmt_point(v)}" for k, v in poly.corners().items()))
    print(f"metrics: hLeft={m.h_left} hRight={m.h_right} w={m.w} totalDepth={m.total_depth}")
    print(f"robots: {state.n}")
    return 0


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        algorithm=Algorithm(args.algorithm),
        scheduler=SCHEDULER_FLAGS[args.scheduler],
        seed=args.seed,
        max_staleness=args.staleness,
        refresh_policy=REFRESH_FLAGS[args.refresh],
        max_steps=args.max_steps,
        distributed_select_prob=args.select_prob,
        view_model=VIEW_MODEL_FLAGS[args.view_model],
    )


def cmd_run(args) -> int:
    state = _load_state(args.state)
    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        trace = run(state, cfg)
    except RunError as exc:
        _emit({"outcome": "error", "error": str(exc)})
        log.error("%s", exc)
        return 1
    with open(args.trace, "w", encoding="utf-8") as fh:
        trace.write(fh)
    final = sorted(set(trace.final_state.robots))
    summary = {
        "outcome": trace.outcome.value,
        "rounds": trace.rounds,
        "moves": trace.moves,
        "events": len(trace.events),
        "finalPositions": [list(c) for c in final],
        "trace": str(args.trace),
    }
    status = 0 if trace.outcome is Outcome.GATHERED else 1
    if args.verify_live:
        reports = verify_trace(trace)
        summary["verify"] = {r.monitor_name: r.status for r in reports}
        if not all(r.passed for r in reports):
            status = 1
    _emit(summary)
    return status


def cmd_verify(args) -> int:
    trace = _load_trace(args.trace)
    try:
        reports = verify_trace(trace)
    except TraceError as exc:
        raise UsageError(f"{args.trace}: malformed trace: {exc}") from exc
    report = {r.monitor_name: r.to_dict() for r in reports}
    _emit(report)
    failed = [r.monitor_name for r in reports if not r.passed]
    if failed:
        log.error("monitors failed: %s", ", ".join(failed))
    return 1 if failed else 0


def _sweep_instance(job):
    index, seed, n_min, n_max, staleness = job
    rng = rng_stream(seed, "sweep-instance", index)
    n = rng.randint(n_min, n_max)
    inst_seed = derive_seed(seed, "sweep", index)
    state = random_connected(GenSpec(n, inst_seed, spread=(index % 5) / 4))
    rows = []
    for alg in Algorithm:
        for sched in Scheduler:
            cfg = RunConfig(alg, sched, inst_seed, max_staleness=staleness)
            trace = run(state, cfg)
            reports = verify_trace(trace)
            failed = [r.monitor_name for r in reports if not r.passed]
            rows.append((alg.value, sched.value, n, trace.rounds, trace.moves, failed))
    return index, rows


def _threads() -> int:
    env = os.environ.get("TRIGATHER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(count: int, n_min: int, n_max: int, seed: int, staleness=None, threads: int = 1) -> dict:
    jobs = [(i, seed, n_min, n_max, staleness) for i in range(count)]
    if threads > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(_sweep_instance, jobs, chunksize=8))
    else:
        results = dict(map(_sweep_instance, jobs))
    agg: dict = {}
    failures_detail = []
    for index in sorted(results):
        for alg, sched, n, rounds, moves, failed in results[index]:
            a = agg.setdefault(
                f"{alg}/{sched}",
                {"instances": 0, "failures": 0, "maxRoundsOverN": 0.0,
                 "maxRoundsOver2N": 0.0, "_moves": 0.0},
            )
            a["instances"] += 1
            a["maxRoundsOverN"] = max(a["maxRoundsOverN"], rounds / n)
            a["maxRoundsOver2N"] = max(a["maxRoundsOver2N"], rounds / (2 * n))
            a["_moves"] += moves / n
            if failed:
                a["failures"] += 1
                failures_detail.append({"instance": index, "run": f"{alg}/{sched}", "monitors": failed})
    for a in agg.values():
        a["meanMovesPerRobot"] = a.pop("_moves") / a["instances"]
    return {
        "count": count,
        "nMin": n_min,
        "nMax": n_max,
        "seed": seed,
        "failures": sum(a["failures"] for a in agg.values()),
        "aggregates": agg,
        "failureDetail": failures_detail[:50],
    }


def cmd_sweep(args) -> int:
    if not 1 <= args.n_min <= args.n_max:
        raise UsageError("need 1 <= --n-min <= --n-max")
    report = sweep(args.count, args.n_min, args.n_max, args.seed, args.staleness, _threads())
    _emit(report)
    return 1 if report["failures"] else 0


def cmd_oracle(args) -> int:
    if args.count:
        rng = rng_stream(args.seed, "oracle")
        configs = []
        for i in range(args.count):
            n = rng.randint(1, args.max_n)
            st = random_connected(GenSpec(n, derive_seed(args.seed, "oracle", i),
                                          allow_multiplicity=True))
            configs.append(tuple(sorted(st.robots)))
    else:
        configs = enumerate_configurations(args.max_n, args.radius)
    out = {"configurations": len(configs), "maxN": args.max_n, "radius": args.radius}
    failed = False
    for alg in Algorithm:
        states = edges = violations = capped = 0
        first = None
        for cfg in configs:
            try:
                g = build_state_graph(cfg, alg, max_nodes=args.node_cap, max_n=args.max_n)
            except StateGraphError as exc:
                capped += 1
                log.warning("%s: %s %s", alg.value, exc, exc.statistics)
                continue
            rep = check_lattice_linearity(g)
            states += rep.statistics["states"]
            edges += rep.statistics["edges"]
            if not rep.passed:
                violations += 1
                if first is None:
                    first = {"configuration": [list(c) for c in cfg],
                             "violation": rep.first_violation[1]}
        out[alg.value] = {"statesChecked": states, "edgesChecked": edges,
                          "violations": violations, "capExceeded": capped,
                          "firstViolation": first}
        failed = failed or violations > 0 or capped > 0
    _emit(out)
    return 1 if failed else 0


def cmd_render(args) -> int:
    trace = _load_trace(args.trace)
    try:
        paths = render_trace(trace, args.out, args.every)
    except OSError as exc:
        log.error("cannot write frames to %s: %s", args.out, exc)
        return 1
    _emit({"frames": len(paths), "dir": str(args.out)})
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trigather", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a state file")
    g.add_argument("--figure1", action="store_true", help="the 29-robot figure instance")
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--spread", type=float, default=0.0)
    g.add_argument("--multiplicity", action="store_true")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_gen)

    pr = sub.add_parser("predict", help="predict the gathering point of a state file")
    pr.add_argument("state")
    pr.set_defaults(func=cmd_predict)

    r = sub.add_parser("run", help="run a swarm and write a trace")
    r.add_argument("--state", required=True)
    r.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="gsgs")
    r.add_argument("--scheduler", choices=list(SCHEDULER_FLAGS), default="sync")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--staleness", type=_staleness, default=None, help="N events or 'inf'")
    r.add_argument("--refresh", choices=list(REFRESH_FLAGS), default="eval")
    r.add_argument("--select-prob", type=float, default=0.5)
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--view-model", choices=list(VIEW_MODEL_FLAGS), default="robot")
    r.add_argument("--trace", required=True)
    r.add_argument("--verify-live", action="store_true")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run every monitor over a trace file")
    v.add_argument("trace")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="random instances x algorithms x schedulers")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=30)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--staleness", type=_staleness, default=None)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", help="exhaustive lattice-linearity check on small swarms")
    o.add_argument("--max-n", type=int, default=4)
    o.add_argument("--radius", type=int, default=3)
    o.add_argument("--count", type=int, default=0, help="sample this many random instances instead")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--node-cap", type=int, default=10**6)
    o.set_defaults(func=cmd_oracle)

    rd = sub.add_parser("render", help="write SVG frames of a trace")
    rd.add_argument("trace")
    rd.add_argument("--out", required=True)
    rd.add_argument("--every", type=int, default=1)
    rd.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
