"""Guard macros and the two movement rule sets as pure functions of a View.

A robot only knows which of its six neighbour slots are occupied.  Both
classifiers are total over the 64 possible views; the per-view answers are
tabulated once at import so the simulator's hot path is a list lookup.
"""
from __future__ import annotations

import enum
from typing import Iterable, NamedTuple, Optional

from trigather.grid import Direction


class View(NamedTuple):
    at1: bool
    at2l: bool
    at2r: bool
    at3l: bool
    at3r: bool
    at4: bool

    @classmethod
    def of(cls, *slots: Direction) -> "View":
        occupied = set(slots)
        return cls(*(d in occupied for d in _SLOT_ORDER))

    @classmethod
    def from_bits(cls, bits: int) -> "View":
        return cls(*(bool(bits >> k & 1) for k in range(6)))

    @property
    def bits(self) -> int:
        return sum(1 << k for k, b in enumerate(self) if b)

    def slots(self) -> frozenset[Direction]:
        return frozenset(d for d, b in zip(_SLOT_ORDER, self) if b)

    def mirror(self) -> "View":
        return View(self.at1, self.at2r, self.at2l, self.at3r, self.at3l, self.at4)

    def __str__(self) -> str:
        names = [d.name.lower() for d in _SLOT_ORDER if d in self.slots()]
        return "{" + ",".join(names) + "}"


_SLOT_ORDER = (
    Direction.V1,
    Direction.V2L,
    Direction.V2R,
    Direction.V3L,
    Direction.V3R,
    Direction.V4,
)

EMPTY_VIEW = View(False, False, False, False, False, False)


def all_views() -> list[View]:
    return [View.from_bits(b) for b in range(64)]


class Algorithm(str, enum.Enum):
    GSGS = "gsgs"
    REVISED = "revised"


class Classification(str, enum.Enum):
    # original rule set
    DOWNWARD = "Downward"
    DOWNSLANT_LEFT = "DownslantLeft"
    DOWNSLANT_RIGHT = "DownslantRight"
    NON_EXTREME = "NonExtreme"
    STAYING = "Staying"
    TERMINATING = "Terminating"
    IDLE = "Idle"
    # revised rule set
    DOWNWARD_II = "DownwardII"
    DOWNSLANT_LEFT_II = "DownslantLeftII"
    DOWNSLANT_RIGHT_II = "DownslantRightII"
    NO_GUARD = "NoGuard"


_MOVES = {
    Classification.DOWNWARD: Direction.V1,
    Classification.NON_EXTREME: Direction.V1,
    Classification.DOWNWARD_II: Direction.V1,
    Classification.DOWNSLANT_LEFT: Direction.V2L,
    Classification.DOWNSLANT_LEFT_II: Direction.V2L,
    Classification.DOWNSLANT_RIGHT: Direction.V2R,
    Classification.DOWNSLANT_RIGHT_II: Direction.V2R,
}

_MIRROR_CLASS = {
    Classification.DOWNSLANT_LEFT: Classification.DOWNSLANT_RIGHT,
    Classification.DOWNSLANT_RIGHT: Classification.DOWNSLANT_LEFT,
    Classification.DOWNSLANT_LEFT_II: Classification.DOWNSLANT_RIGHT_II,
    Classification.DOWNSLANT_RIGHT_II: Classification.DOWNSLANT_LEFT_II,
}


def mirror_classification(c: Classification) -> Classification:
    return _MIRROR_CLASS.get(c, c)


def _slot(v: View, d: Direction) -> bool:
    return v[_SLOT_ORDER.index(d)]


def at(v: View, positions: Iterable[Direction]) -> bool:
    """All listed slots are occupied."""
    return all(_slot(v, d) for d in positions)


def only_at(v: View, positions: Iterable[Direction]) -> bool:
    """All listed slots are occupied and nothing else is."""
    positions = set(positions)
    return at(v, positions) and not any(
        b for d, b in zip(_SLOT_ORDER, v) if d not in positions
    )


def extreme(v: View) -> bool:
    """Nothing on top, and not flanked on both the left and the right."""
    left = v.at2l or v.at3l
    right = v.at2r or v.at3r
    return not v.at4 and not (left and right)


def _terminating(v: View) -> bool:
    return extreme(v) and not any(v)


def _staying(v: View) -> bool:
    D = Direction
    return extreme(v) and (
        only_at(v, {D.V3R})
        or only_at(v, {D.V3L})
        or only_at(v, {D.V1, D.V3R})
        or only_at(v, {D.V1, D.V3L})
    )


def _downward(v: View) -> bool:
    return extreme(v) and v.at1 and not (v.at3r or v.at3l)


def _downslant(v: View, side: bool) -> bool:
    return (
        extreme(v)
        and not _downward(v)
        and not _staying(v)
        and not _terminating(v)
        and side
    )


def _non_extreme(v: View) -> bool:
    return (
        not extreme(v)
        and v.at2r
        and v.at2l
        and not (v.at3r or v.at3l or v.at4)
    )


def _classify_gsgs(v: View) -> Classification:
    # Macro order; guards are mutually exclusive so the order is only a tiebreak
    # of last resort.
    if _terminating(v):
        return Classification.TERMINATING
    if _staying(v):
        return Classification.STAYING
    if _downward(v):
        return Classification.DOWNWARD
    if _downslant(v, v.at2r):
        return Classification.DOWNSLANT_RIGHT
    if _downslant(v, v.at2l):
        return Classification.DOWNSLANT_LEFT
    if _non_extreme(v):
        return Classification.NON_EXTREME
    return Classification.IDLE


def _classify_revised(v: View) -> Classification:
    D = Direction
    # "not At(v3l, v4, v3r)" read as none of the three occupied.
    if (v.at1 and not (v.at3l or v.at4 or v.at3r)) or only_at(v, {D.V2L, D.V2R}):
        return Classification.DOWNWARD_II
    if only_at(v, {D.V2L}):
        return Classification.DOWNSLANT_LEFT_II
    if only_at(v, {D.V2R}):
        return Classification.DOWNSLANT_RIGHT_II
    return Classification.NO_GUARD


_GSGS_TABLE = [_classify_gsgs(View.from_bits(b)) for b in range(64)]
_REVISED_TABLE = [_classify_revised(View.from_bits(b)) for b in range(64)]


def classify_gsgs(v: View) -> Classification:
    return _GSGS_TABLE[v.bits]


def classify_revised(v: View) -> Classification:
    return _REVISED_TABLE[v.bits]


def classify(v: View, algorithm: Algorithm) -> Classification:
    if Algorithm(algorithm) is Algorithm.GSGS:
        return classify_gsgs(v)
    return classify_revised(v)


def move_of(c: Classification) -> Optional[Direction]:
    return _MOVES.get(c)


def impedensable(v: View, algorithm: Algorithm) -> bool:
    """Whether a robot with this view is enabled to move."""
    return move_of(classify(v, algorithm)) is not None


def move_table(algorithm: Algorithm) -> list[Optional[Direction]]:
    """Move (or None) for each view, indexed by ``View.bits``."""
    table = _GSGS_TABLE if Algorithm(algorithm) is Algorithm.GSGS else _REVISED_TABLE
    return [move_of(c) for c in table]
