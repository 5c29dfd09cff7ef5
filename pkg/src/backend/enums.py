from enum import Enum
from typing import Any


class Axis(Enum):
    """Rotation axis."""

    X = 0
    Y = 1
    Z = 2


class PlannerMode(Enum):
    """Navigation modes."""

    G = "g", "geometry only (G-Nav)", True
    V = "v", "vision only (V-Nav)", False
    VG = "vg", "joint visual-geometry (VG-Nav)", True

    def __init__(self, key: str, description: str, recovery: bool) -> None:
        """Construct mode.

        Args:
            key: short identifier used on the command line and in file names
            description: mode description
            recovery: whether the in-place recovery rotation is enabled by default
        """

        self._key = key
        self._description = description
        self._recovery = recovery

    @property
    def key(self) -> str:
        return self._key

    @property
    def description(self) -> str:
        return self._description

    @property
    def recovery(self) -> bool:
        return self._recovery

    @classmethod
    def from_key(cls, key: str) -> "PlannerMode":
        """Look up a mode by its key.

        Args:
            key: mode key, case-insensitive

        Returns:
            matching mode

        Raises:
            ValueError: if no mode has that key
        """

        for mode in cls:
            if mode.key == key.lower():
                return mode
        raise ValueError(f"unknown planner mode '{key}'")

    def __eq__(self, other: Any) -> bool:
        """Check equality based on `key`."""

        if type(self) is not type(other):
            return False

        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)


class Navigability(Enum):
    """Navigability of a local navigation point."""

    NAVIGABLE = 255
    NON_NAVIGABLE = 0
    OUTSIDE_FOV = -1

    def __str__(self) -> str:
        match self:
            case Navigability.NAVIGABLE:
                return "navigable"
            case Navigability.NON_NAVIGABLE:
                return "non-navigable"
            case Navigability.OUTSIDE_FOV:
                return "outside-fov"


class Outcome(Enum):
    """How a trial ended."""

    REACHED = 0
    STUCK = 1
    TIMEOUT = 2
    OUT_OF_BOUNDS = 3

    def __str__(self) -> str:
        match self:
            case Outcome.REACHED:
                return "reached"
            case Outcome.STUCK:
                return "stuck"
            case Outcome.TIMEOUT:
                return "timeout"
            case Outcome.OUT_OF_BOUNDS:
                return "out-of-bounds"
