import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigather.gen import (
    GenSpec,
    StateFormatError,
    parse_state,
    random_connected,
    serialize_state,
)
from trigather.grid import Coord, is_vertex, predict_gathering_point
from trigather.swarm import extents, is_connected


def test_figure1(fig1):
    assert fig1.n == 29
    assert len(fig1.occupancy) == 29
    assert is_connected(fig1)
    assert predict_gathering_point(fig1.robots) == Coord(6, -16)
    assert extents(fig1) == (-1, -13, 0, 10)


def test_single_robot_spec():
    assert random_connected(GenSpec(1, 99)).robots == (Coord(0, 0),)


@settings(max_examples=50)
@given(st.integers(1, 30), st.integers(0, 2**64 - 1), st.floats(0, 1), st.booleans())
def test_random_connected_contract(n, seed, spread, mult):
    s = random_connected(GenSpec(n, seed, mult, spread))
    assert s.n == n
    assert is_connected(s)
    assert all(is_vertex(c) for c in s.robots)
    if not mult:
        assert len(s.occupancy) == n


def test_random_connected_deterministic():
    a = random_connected(GenSpec(30, 5, spread=0.5))
    b = random_connected(GenSpec(30, 5, spread=0.5))
    assert a == b
    assert random_connected(GenSpec(30, 6)) != a


def test_multiplicity_produces_stacks():
    stacked = [random_connected(GenSpec(30, seed, allow_multiplicity=True)) for seed in range(10)]
    assert any(len(s.occupancy) < s.n for s in stacked)


def test_genspec_validation():
    with pytest.raises(ValueError):
        GenSpec(0)
    with pytest.raises(ValueError):
        GenSpec(3, spread=2.0)


def test_roundtrip(fig1):
    doc = serialize_state(fig1)
    assert json.loads(doc)["format"] == "trigather-state/1"
    back = parse_state(doc)
    assert back.same_multiset(fig1)
    assert serialize_state(back) == doc


def test_duplicates_allowed():
    s = parse_state('{"format":"trigather-state/1","coords":[[0,0],[0,0]]}')
    assert s.n == 2


@pytest.mark.parametrize(
    "doc, message",
    [
        ('{"format":"trigather-state/1","coords":[[1,2]]}', "parity"),
        ('{"format":"trigather-state/1","coords":[]}', "empty swarm"),
        ('{"format":"other","coords":[[0,0]]}', "format"),
        ('{"format":"trigather-state/1","coords":[[0]]}', "malformed"),
        ('{"format":"trigather-state/1","coords":[[0,"a"]]}', "malformed"),
        ('{"format":"trigather-state/1"}', "coords"),
        ("not json", "JSON"),
    ],
)
def test_parse_errors(doc, message):
    with pytest.raises(StateFormatError, match=message):
        parse_state(doc)
