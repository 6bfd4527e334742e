"""Acceptance gate.  Each test prints one PASS/FAIL line for its criterion."""
import time
from collections import Counter

import pytest

from trigather.engine import Outcome, RefreshPolicy, RunConfig, Scheduler, run
from trigather.gen import GenSpec, figure1_instance, random_connected
from trigather.grid import Coord, predict_gathering_point
from trigather.rng import derive_seed, rng_stream
from trigather.rules import Algorithm, all_views, classify, mirror_classification, move_of
from trigather.verify import (
    build_state_graph,
    check_connectivity,
    check_lattice_linearity,
    check_layers,
    check_polygon,
    check_round_progress,
    check_slants,
    check_stale_equivalence,
    enumerate_configurations,
    replay,
)

FRESH = (Scheduler.SYNCHRONOUS, Scheduler.CENTRAL, Scheduler.DISTRIBUTED)
Q_FIG1 = Coord(6, -16)
INSTANCES = 1000
SEED = 20240501


@pytest.fixture
def report(capsys):
    def emit(criterion: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    return emit


def figure1_runs():
    for alg in Algorithm:
        yield RunConfig(alg, Scheduler.SYNCHRONOUS)
        for seed in range(20):
            yield RunConfig(alg, Scheduler.CENTRAL, seed)
            yield RunConfig(alg, Scheduler.DISTRIBUTED, seed)
            yield RunConfig(alg, Scheduler.ASYNC_STALE, seed, max_staleness=None)
            yield RunConfig(alg, Scheduler.ASYNC_STALE, seed, max_staleness=8)


@pytest.fixture(scope="module")
def fig1_traces():
    fig1 = figure1_instance()
    out = []
    for cfg in figure1_runs():
        t0 = time.perf_counter()
        tr = run(fig1, cfg)
        out.append((tr, time.perf_counter() - t0))
    return out


@pytest.fixture(scope="module")
def sweep_traces():
    """Criterion-2 traces: random connected swarms under fresh schedulers."""
    traces = []
    for i in range(INSTANCES):
        n = rng_stream(SEED, "acceptance-n", i).randint(1, 30)
        seed = derive_seed(SEED, "acceptance", i)
        s = random_connected(GenSpec(n, seed, spread=(i % 5) / 4))
        for alg in Algorithm:
            for sched in FRESH:
                traces.append(run(s, RunConfig(alg, sched, seed)))
    return traces


def test_criterion_1_figure1_golden(report, fig1_traces):
    bad = [tr.config for tr, _ in fig1_traces
           if tr.outcome is not Outcome.GATHERED or set(tr.final_state.robots) != {Q_FIG1}]
    slowest = max(dt for _, dt in fig1_traces)
    ok = not bad and slowest < 1.0
    report(1, ok, f"{len(fig1_traces)} runs, {len(bad)} not gathered at (6,-16), "
                  f"slowest run {slowest:.3f} s (limit 1 s)")
    assert ok, bad[:3]


def test_criterion_2_round_bound(report, sweep_traces):
    over_2n = over_old = 0
    worst = 0.0
    for tr in sweep_traces:
        n = tr.n
        assert tr.outcome is Outcome.GATHERED
        worst = max(worst, tr.rounds / (2 * n))
        over_2n += tr.rounds > 2 * n
        over_old += tr.rounds > 2.5 * (n + 1)
    ok = over_2n == 0 and over_old == 0
    report(2, ok, f"{INSTANCES} instances x 2 algorithms x 3 schedulers = {len(sweep_traces)} runs, "
                  f"{over_2n} over 2n, {over_old} over 2.5(n+1), max rounds/2n = {worst:.3f}")
    assert ok


def test_criterion_3_invariant_monitors(report, fig1_traces, sweep_traces):
    traces = [tr for tr, _ in fig1_traces] + sweep_traces
    failures = Counter()
    min_drop = None
    informational = 0
    for tr in traces:
        for check in (check_connectivity, check_slants, check_layers, check_polygon):
            if not check(tr).passed:
                failures[check.__name__] += 1
        rp = check_round_progress(tr)
        if rp.informational:
            informational += 1
            continue
        if not rp.passed:
            failures["check_round_progress"] += 1
        drop = rp.statistics["minDrop"]
        if drop is not None:
            min_drop = drop if min_drop is None else min(min_drop, drop)
    ok = not failures and (min_drop is None or min_drop >= 1)
    report(3, ok, f"{len(traces)} traces, violations {dict(failures) or 0}, "
                  f"min top-layer drop per fresh round = {min_drop} doubled units, "
                  f"{informational} stale traces reported only")
    assert ok


def test_criterion_4_predicted_point_is_stable(report, fig1_traces, sweep_traces):
    traces = [tr for tr, _ in fig1_traces] + sweep_traces
    states = bad = 0
    for tr in traces:
        q = predict_gathering_point(tr.initial_state.robots)
        for step in replay(tr):
            states += 1
            if predict_gathering_point(step.robots) != q:
                bad += 1
    report(4, bad == 0, f"{states} intermediate states over {len(traces)} traces, {bad} changed Q")
    assert bad == 0


def test_criterion_5_lattice_linearity(report):
    configs = enumerate_configurations(4, 3)
    t0 = time.perf_counter()
    details = []
    violations = 0
    for alg in Algorithm:
        states = edges = 0
        for key in configs:
            rep = check_lattice_linearity(build_state_graph(key, alg, max_nodes=10**6))
            states += rep.statistics["states"]
            edges += rep.statistics["edges"]
            violations += not rep.passed
        details.append(f"{alg.value}: {states} states / {edges} edges")
    report(5, violations == 0, f"{len(configs)} configurations, {'; '.join(details)}, "
                               f"{violations} violations, {time.perf_counter() - t0:.1f} s")
    assert violations == 0


def test_criterion_6_stale_containment(report):
    # on-evaluate departures fail; on-move reads may predate the robot's own
    # previous evaluation, so its departures and cap hits are only counted
    violations = departures = capped = runs = 0
    for i in range(100):
        n = rng_stream(SEED, "containment-n", i).randint(1, 4)
        s = random_connected(GenSpec(n, derive_seed(SEED, "containment", i), allow_multiplicity=True))
        for alg in Algorithm:
            g = build_state_graph(s, alg)
            for policy in RefreshPolicy:
                tr = run(s, RunConfig(alg, Scheduler.ASYNC_STALE, i, None, policy))
                runs += 1
                contained = check_stale_equivalence(g, tr).passed
                if policy is RefreshPolicy.ON_EVALUATE:
                    violations += (not contained) + (tr.outcome is not Outcome.GATHERED)
                else:
                    departures += not contained
                    capped += tr.outcome is not Outcome.GATHERED
    report(6, violations == 0, f"{runs} stale runs, {violations} on-evaluate violations; "
                               f"on-move (reported only): {departures} left the fresh reachable "
                               f"graph, {capped} hit the step cap")
    assert violations == 0


def test_criterion_7_census(report):
    views = all_views()
    gsgs = [v for v in views if move_of(classify(v, Algorithm.GSGS))]
    revised = [v for v in views if move_of(classify(v, Algorithm.REVISED))]
    subset = all(move_of(classify(v, Algorithm.GSGS)) == move_of(classify(v, Algorithm.REVISED))
                 for v in revised)
    ok = len(views) == 64 and len(gsgs) == 11 and len(revised) == 7 and subset
    report(7, ok, f"{len(views)} views, {len(gsgs)} enabled under gsgs (expect 11), "
                  f"{len(revised)} under revised (frozen 7), revised within gsgs with equal moves: {subset}")
    assert ok


def test_criterion_8_mirror_and_determinism(report, tmp_path):
    mismatched = [v for alg in Algorithm for v in all_views()
                  if classify(v.mirror(), alg) is not mirror_classification(classify(v, alg))]
    fig1 = figure1_instance()
    differing = []
    for alg in Algorithm:
        for sched in Scheduler:
            cfg = RunConfig(alg, sched, seed=99, max_staleness=8)
            paths = [tmp_path / f"{alg.value}-{sched.value}-{k}.jsonl" for k in range(2)]
            for p in paths:
                with open(p, "w", encoding="utf-8") as fh:
                    run(fig1, cfg).write(fh)
            if paths[0].read_bytes() != paths[1].read_bytes():
                differing.append(f"{alg.value}/{sched.value}")
    ok = not mismatched and not differing
    report(8, ok, f"{len(mismatched)} of 128 classifications break mirror equivariance, "
                  f"{len(differing)} of 8 configurations gave differing trace bytes")
    assert ok
