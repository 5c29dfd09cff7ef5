from dataclasses import dataclass, field

import numpy as np

from backend.enums import Axis


def rotation_matrix(angle: float, axis: Axis) -> np.ndarray:
    """Rotation matrix for `angle` radians about `axis`.

    Args:
        angle: angle to rotate by
        axis: axis to rotate about

    Returns:
        3x3 rotation matrix
    """

    sin = np.sin(angle)
    cos = np.cos(angle)

    match axis:
        case Axis.X:
            return np.array([[1, 0, 0], [0, cos, -sin], [0, sin, cos]])
        case Axis.Y:
            return np.array([[cos, 0, sin], [0, 1, 0], [-sin, 0, cos]])
        case Axis.Z:
            return np.array([[cos, -sin, 0], [sin, cos, 0], [0, 0, 1]])


def wrap_angle(angle):
    """Wrap angle(s) into [-pi, pi)."""

    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class Pose:
    """Planar robot pose.

    The robot frame has x forward, y left and z up; it is the world frame
    rotated by `heading` about z and translated to `position`.
    """

    position: np.ndarray
    heading: float = 0.0
    _rotation: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=float).reshape(-1)
        if position.shape == (2,):
            position = np.append(position, 0.0)
        assert position.shape == (3,), "Position must be 2- or 3-dimensional"
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))
        object.__setattr__(self, "_rotation", rotation_matrix(self.heading, Axis.Z))

    @property
    def x(self) -> float:
        return float(self.position[0])

    @property
    def y(self) -> float:
        return float(self.position[1])

    @property
    def z(self) -> float:
        return float(self.position[2])

    def to_world(self, points: np.ndarray) -> np.ndarray:
        """Map robot-frame point(s) into the world frame."""

        return np.asarray(points, dtype=float) @ self._rotation.T + self.position

    def direction_to_world(self, directions: np.ndarray) -> np.ndarray:
        """Rotate robot-frame direction(s) into the world frame."""

        return np.asarray(directions, dtype=float) @ self._rotation.T

    def distance_to(self, other: "Pose") -> float:
        """Planar distance to `other`."""

        return float(np.hypot(other.x - self.x, other.y - self.y))
