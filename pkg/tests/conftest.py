import pytest

from trigather.gen import figure1_instance
from trigather.grid import Coord
from trigather.swarm import GlobalState


@pytest.fixture
def fig1():
    return figure1_instance()


@pytest.fixture
def vertical_pair():
    return GlobalState((Coord(0, 0), Coord(0, -2)))


@pytest.fixture
def chain3():
    return GlobalState((Coord(0, 0), Coord(1, -1), Coord(2, -2)))
