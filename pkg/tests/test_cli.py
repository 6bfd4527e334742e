import json
import xml.etree.ElementTree as ET

import pytest

from trigather.cli import main, sweep
from trigather.engine import RunConfig, Trace, TraceEvent, run
from trigather.gen import figure1_instance, serialize_state
from trigather.grid import Coord

from .helpers import state


@pytest.fixture
def call(capsys, caplog):
    """Run the CLI; return (exit code, stdout, log text)."""
    def invoke(*argv):
        caplog.clear()
        code = main([str(a) for a in argv])
        return code, capsys.readouterr().out, caplog.text
    return invoke


@pytest.fixture
def fig1_file(tmp_path):
    p = tmp_path / "fig1.json"
    p.write_text(serialize_state(figure1_instance()))
    return p


def write_state(tmp_path, *coords, name="s.json"):
    p = tmp_path / name
    p.write_text(serialize_state(state(*coords)))
    return p


def test_gen_figure1_roundtrip(call, tmp_path, fig1_file):
    code, out, _ = call("gen", "--figure1")
    assert code == 0 and out == fig1_file.read_text()
    code, out, _ = call("gen", "--n", 12, "--seed", 4, "--spread", 0.5)
    assert code == 0 and len(json.loads(out)["coords"]) == 12
    assert call("gen")[0] == 2


def test_predict_figure1(call, fig1_file):
    code, out, _ = call("predict", fig1_file)
    assert code == 0
    assert out.splitlines()[0] == "Q = (6,-16), budget = 58 rounds"
    assert "P=(5,-18) Q=(6,-16)" in out and "totalDepth=15" in out


def test_predict_single_robot(call, tmp_path):
    code, out, _ = call("predict", write_state(tmp_path, (2, 0)))
    assert code == 0 and out.startswith("Q = (2,0), budget = 2 rounds")


def test_predict_warns_on_disconnected_input(call, tmp_path):
    code, out, err = call("predict", write_state(tmp_path, (0, 0), (4, 0)))
    assert code == 0 and "disconnected" in err
    assert out.startswith("Q = ")


@pytest.mark.parametrize("bad, message", [
    ("not json", "JSON"),
    ('{"format":"x","coords":[[0,0]]}', "format"),
    ('{"format":"trigather-state/1","coords":[]}', "empty swarm"),
    ('{"format":"trigather-state/1","coords":[[1,0]]}', "parity"),
])
def test_bad_state_files(call, tmp_path, bad, message):
    p = tmp_path / "bad.json"
    p.write_text(bad)
    code, _, err = call("predict", p)
    assert code == 2 and message in err


def test_run_and_verify(call, tmp_path, fig1_file):
    trace = tmp_path / "t.jsonl"
    code, out, _ = call("run", "--state", fig1_file, "--algorithm", "revised",
                        "--scheduler", "async", "--staleness", "inf", "--seed", 7,
                        "--trace", trace, "--verify-live")
    summary = json.loads(out)
    assert code == 0 and summary["outcome"] == "gathered"
    assert summary["finalPositions"] == [[6, -16]]
    assert set(summary["verify"].values()) <= {"pass", "informational"}
    code, out, _ = call("verify", trace)
    report = json.loads(out)
    assert code == 0 and report["round_progress"]["status"] == "informational"
    assert all(r["passed"] for r in report.values())


def test_run_is_deterministic(call, tmp_path, fig1_file):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for t in (a, b):
        call("run", "--state", fig1_file, "--scheduler", "dist", "--seed", 3, "--trace", t)
    assert a.read_bytes() == b.read_bytes()


def test_run_disconnected_exits_1(call, tmp_path):
    code, out, err = call("run", "--state", write_state(tmp_path, (0, 0), (4, 0)),
                          "--trace", tmp_path / "t.jsonl")
    assert code == 1 and json.loads(out)["outcome"] == "error" and "disconnected" in err


def test_run_step_cap_exits_1(call, tmp_path, fig1_file):
    code, out, _ = call("run", "--state", fig1_file, "--scheduler", "central",
                        "--max-steps", 5, "--trace", tmp_path / "t.jsonl")
    assert code == 1 and json.loads(out)["outcome"] == "step-cap"


def test_run_usage_errors(call, tmp_path, fig1_file):
    with pytest.raises(SystemExit) as info:
        main(["run", "--state", str(fig1_file), "--trace", "x", "--staleness", "-1"])
    assert info.value.code == 2
    code, _, _ = call("run", "--state", fig1_file, "--trace", tmp_path / "t",
                      "--select-prob", 0)
    assert code == 2


def test_verify_rejects_forged_trace(call, tmp_path):
    s = state((0, 0), (0, -2))
    tr = run(s, RunConfig(scheduler="central"))
    e = tr.events[0] if tr.events[0].to else tr.events[1]
    # swap the honest move for an upward one
    forged = Trace(tr.config, s, [TraceEvent(0, 1, e.view_used, (0,) * 6, e.classification,
                                             Coord(0, -2), Coord(0, 0), 0, 0)],
                   state((0, 0), (0, 0)), 1, tr.outcome)
    p = tmp_path / "forged.jsonl"
    p.write_text(forged.dumps())
    code, out, err = call("verify", p)
    report = json.loads(out)
    assert code == 1 and not report["potential"]["passed"]
    assert "potential" in err


def test_verify_forged_disconnection(call, tmp_path):
    s = state((0, 0), (1, -1), (2, -2))
    robots = list(s.robots)
    tr = run(s, RunConfig(scheduler="central"))
    e = tr.events[0]
    # the top robot walks off to the left, splitting the chain
    forged = Trace(tr.config, s, [TraceEvent(0, 0, e.view_used, (0,) * 6, e.classification,
                                             robots[0], Coord(-1, -1), 0, 0)],
                   state((-1, -1), (1, -1), (2, -2)), 1, tr.outcome)
    p = tmp_path / "forged.jsonl"
    p.write_text(forged.dumps())
    code, out, _ = call("verify", p)
    assert code == 1 and not json.loads(out)["connectivity"]["passed"]


def test_run_figure1_sync(call, tmp_path, fig1_file):
    code, out, _ = call("run", "--state", fig1_file, "--algorithm", "gsgs", "--scheduler", "sync",
                        "--seed", 1, "--trace", tmp_path / "t.jsonl")
    assert code == 0 and json.loads(out)["finalPositions"] == [[6, -16]]


def test_verify_malformed_trace(call, tmp_path):
    p = tmp_path / "junk.jsonl"
    p.write_text("{}\n")
    assert call("verify", p)[0] == 2


def test_sweep_single_robot(call):
    code, out, _ = call("sweep", "--count", 1, "--n-min", 1, "--n-max", 1)
    report = json.loads(out)
    assert code == 0 and report["failures"] == 0
    assert len(report["aggregates"]) == 8
    assert all(a["maxRoundsOverN"] == 0 for a in report["aggregates"].values())


def test_sweep_is_deterministic_and_order_independent():
    a = sweep(6, 2, 10, seed=5)
    b = sweep(6, 2, 10, seed=5, threads=2)
    assert a == b and a["failures"] == 0


def test_sweep_bad_range(call):
    assert call("sweep", "--count", 1, "--n-min", 5, "--n-max", 2)[0] == 2


def test_oracle_small(call):
    code, out, _ = call("oracle", "--max-n", 2, "--radius", 2)
    report = json.loads(out)
    assert code == 0 and report["configurations"] == 2 + 3  # one or two robots on a vertex, three dimers
    for alg in ("gsgs", "revised"):
        assert report[alg]["violations"] == 0


def test_oracle_sampled(call):
    code, out, _ = call("oracle", "--max-n", 1, "--count", 3)
    report = json.loads(out)
    assert code == 0 and report["configurations"] == 3
    assert report["gsgs"]["statesChecked"] == 3 and report["gsgs"]["edgesChecked"] == 0


def test_render(call, tmp_path, fig1_file):
    trace = tmp_path / "t.jsonl"
    call("run", "--state", fig1_file, "--trace", trace)
    tr = Trace.loads(trace.read_text())
    code, out, _ = call("render", trace, "--out", tmp_path / "a", "--every", 4)
    assert code == 0
    frames = sorted((tmp_path / "a").glob("*.svg"))
    assert json.loads(out)["frames"] == len(frames) == 1 + -(-tr.rounds // 4)
    call("render", trace, "--out", tmp_path / "b", "--every", 4)
    for f in frames:
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
        root = ET.fromstring(f.read_text())
        assert root.tag.endswith("svg")
        assert len([c for c in root if c.tag.endswith("circle")]) >= 1


def test_render_single_robot(call, tmp_path):
    trace = tmp_path / "t.jsonl"
    call("run", "--state", write_state(tmp_path, (0, 0)), "--trace", trace)
    code, out, _ = call("render", trace, "--out", tmp_path / "f")
    assert code == 0 and json.loads(out)["frames"] == 1
