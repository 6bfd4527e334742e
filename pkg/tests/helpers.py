from hypothesis import strategies as st

from trigather.gen import GenSpec, random_connected
from trigather.grid import Coord
from trigather.swarm import GlobalState


def state(*coords):
    return GlobalState(tuple(Coord(x, y) for x, y in coords))


coords = st.builds(
    lambda x, k: Coord(x, 2 * k - (x % 2)),
    st.integers(-40, 40),
    st.integers(-40, 40),
)

connected_states = st.builds(
    lambda n, seed, spread, mult: random_connected(GenSpec(n, seed, mult, spread)),
    st.integers(1, 20),
    st.integers(0, 2**64 - 1),
    st.sampled_from([0.0, 0.25, 0.5, 1.0]),
    st.booleans(),
)
