"""Navigability images and clouds from semantic labels.

In simulation the segmentation network is replaced by an oracle that reads the
world's class grid where each pixel ray hits the terrain.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from backend.enums import Axis, Navigability
from backend.errors import ConfigError, InvalidArgumentError, OutputError
from backend.math import Pose, rotation_matrix
from backend.simworld import World, raycast_many
from backend.surfaces import FieldOfView

logger = logging.getLogger(__name__)

NO_RETURN = -1


@dataclass(frozen=True)
class SemanticClassMap:
    """Which semantic classes the robot may drive on."""

    class_names: tuple[str, ...]
    navigable: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.class_names) != len(self.navigable):
            raise ConfigError("class map needs one navigability flag per class")
        if len(set(self.class_names)) != len(self.class_names):
            raise ConfigError("class map lists a class twice")

    @classmethod
    def from_dict(cls, mapping: dict[str, bool]) -> "SemanticClassMap":
        return cls(tuple(mapping), tuple(bool(flag) for flag in mapping.values()))

    def to_dict(self) -> dict[str, bool]:
        return dict(zip(self.class_names, self.navigable))

    def with_flag(self, name: str, navigable: bool) -> "SemanticClassMap":
        mapping = self.to_dict()
        if name not in mapping:
            raise ConfigError(f"unknown class '{name}'")
        mapping[name] = navigable
        return SemanticClassMap.from_dict(mapping)

    def is_navigable(self, name: str) -> bool:
        try:
            return self.navigable[self.class_names.index(name)]
        except ValueError:
            raise ConfigError(f"unknown class '{name}'") from None

    def check_covers(self, names) -> None:
        """Raise ConfigError listing every name the map does not know."""

        missing = [name for name in names if name not in self.class_names]
        if missing:
            raise ConfigError([f"class '{name}' is not in the class map" for name in missing])

    def lut(self, names) -> np.ndarray:
        """Lookup table from class index (into `names`) to iota."""

        self.check_covers(names)
        return np.array(
            [Navigability.NAVIGABLE.value if self.is_navigable(n) else Navigability.NON_NAVIGABLE.value for n in names],
            dtype=np.uint8,
        )


@dataclass(frozen=True)
class CameraModel:
    """Ideal pinhole depth camera rigidly mounted on the robot.

    The camera frame shares the sensor frame's axes (x forward, y left, z up)
    before the downward `pitch` is applied.

    Attributes:
        width: image columns
        height: image rows
        horizontal_fov: horizontal field of view (rad)
        vertical_fov: vertical field of view (rad)
        mount: optical centre in the sensor frame (m)
        pitch: downward tilt (rad)
        max_range: farthest return along a pixel ray (m)
        label_noise: probability that a pixel gets a wrong class
    """

    width: int = 160
    height: int = 120
    horizontal_fov: float = np.radians(87.0)
    vertical_fov: float = np.radians(58.0)
    mount: tuple[float, float, float] = (0.1, 0.0, -0.1)
    pitch: float = np.radians(15.0)
    max_range: float = 10.0
    label_noise: float = 0.0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError("image must have at least one pixel")
        if not (0 < self.horizontal_fov < np.pi and 0 < self.vertical_fov < np.pi):
            raise InvalidArgumentError("camera field of view must be in (0, pi)")
        if not 0.0 <= self.label_noise <= 1.0:
            raise InvalidArgumentError("label noise must be a probability")
        if self.max_range <= 0:
            raise InvalidArgumentError("camera range must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def focal_lengths(self) -> tuple[float, float]:
        return (
            (self.width / 2) / np.tan(self.horizontal_fov / 2),
            (self.height / 2) / np.tan(self.vertical_fov / 2),
        )

    @property
    def principal_point(self) -> tuple[float, float]:
        return (self.width - 1) / 2, (self.height - 1) / 2

    @property
    def fov(self) -> FieldOfView:
        """Angular extents in the sensor frame."""

        return FieldOfView.centred(self.horizontal_fov, self.vertical_fov, self.pitch)

    @property
    def rotation(self) -> np.ndarray:
        """Camera-to-sensor rotation (the downward pitch)."""

        return rotation_matrix(self.pitch, Axis.Y)

    def pixel_rays(self) -> np.ndarray:
        """(height, width, 3) rays in the camera frame with unit forward component."""

        fx, fy = self.focal_lengths
        cx, cy = self.principal_point
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return np.stack([np.ones(u.shape), -(u - cx) / fx, -(v - cy) / fy], axis=-1)

    def to_sensor(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + np.asarray(self.mount)


@dataclass(frozen=True, eq=False)
class CameraFrame:
    """Depth and class images of one camera capture.

    `depth` holds the distance along the optical axis, NaN for no return;
    `classes` holds indices into `class_names`, NO_RETURN for no return.
    """

    depth: np.ndarray
    classes: np.ndarray
    class_names: tuple[str, ...]

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)


@dataclass(frozen=True, eq=False)
class NavigabilityCloud:
    """Points carrying a binary navigability value iota in {0, 255}."""

    points: np.ndarray
    iota: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        iota = np.asarray(self.iota, dtype=np.uint8).reshape(-1)
        if len(points) != len(iota):
            raise InvalidArgumentError("every point needs one navigability value")
        if not np.all((iota == 0) | (iota == 255)):
            raise InvalidArgumentError("navigability values must be 0 or 255")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "iota", iota)

    def __len__(self) -> int:
        return len(self.iota)


def camera_pose(robot: Pose, camera: CameraModel, sensor_height: float) -> Pose:
    """World pose of the camera's optical centre; pitch stays in the camera model."""

    offset = np.asarray(camera.mount) + np.array([0.0, 0.0, sensor_height])
    return Pose(robot.to_world(offset), robot.heading)


def segment_oracle(world: World, pose: Pose, camera: CameraModel, seed=None) -> CameraFrame:
    """Perfect segmentation: raycast every pixel and read the class at the hit.

    Args:
        world: terrain with its class grid
        pose: world pose of the camera's optical centre (see `camera_pose`)
        camera: camera model
        seed: seed for label noise, unused when the model has none

    Returns:
        depth and class images
    """

    if not world.contains(pose.x, pose.y):
        raise InvalidArgumentError("camera pose is outside the world")
    rays = camera.pixel_rays().reshape(-1, 3)
    norms = np.linalg.norm(rays, axis=1)
    directions = pose.direction_to_world((rays / norms[:, None]) @ camera.rotation.T)
    distance = raycast_many(world, pose.position, directions, camera.max_range)

    hit = np.isfinite(distance)
    depth = distance / norms
    classes = np.full(len(rays), NO_RETURN, dtype=np.int32)
    points = pose.position + directions[hit] * distance[hit, None]
    classes[hit] = world.class_index_at(points[:, 0], points[:, 1])

    if camera.label_noise > 0 and len(world.class_names) > 1:
        rng = np.random.default_rng(seed)
        flip = hit & (rng.random(len(rays)) < camera.label_noise)
        shift = rng.integers(1, len(world.class_names), size=int(flip.sum()))
        classes[flip] = (classes[flip] + shift) % len(world.class_names)

    return CameraFrame(
        np.where(hit, depth, np.nan).reshape(camera.shape),
        classes.reshape(camera.shape),
        world.class_names,
    )


def navigability_image(classes: np.ndarray, class_names, class_map: SemanticClassMap) -> np.ndarray:
    """Binary navigability image: 255 for navigable classes, 0 otherwise.

    No-return pixels map to 0; they carry no depth and are dropped on projection.

    Raises:
        ConfigError: if a class present in the image is not in the map
    """

    classes = np.asarray(classes)
    image = np.zeros(classes.shape, dtype=np.uint8)
    if classes.size == 0:
        return image
    valid = classes != NO_RETURN
    present = np.unique(classes[valid])
    lut = np.zeros(len(class_names), dtype=np.uint8)
    lut[present] = class_map.lut([class_names[i] for i in present])
    image[valid] = lut[classes[valid]]
    return image


def project_navigability(
    nav_image: np.ndarray, depth_image: np.ndarray, camera: CameraModel, pose: Pose | None = None
) -> NavigabilityCloud:
    """Back-project valid-depth pixels into 3-D points carrying their iota.

    Args:
        nav_image: (h, w) binary navigability image
        depth_image: (h, w) depth along the optical axis, NaN for no return
        camera: camera model
        pose: pose of the camera's optical centre in the output frame; when None
            the points are expressed in the sensor frame through the camera mount

    Returns:
        navigability cloud
    """

    nav_image = np.asarray(nav_image)
    depth_image = np.asarray(depth_image, dtype=float)
    if nav_image.shape != depth_image.shape or nav_image.shape != camera.shape:
        raise InvalidArgumentError(
            f"image shapes differ: navigability {nav_image.shape}, depth {depth_image.shape}, camera {camera.shape}"
        )
    valid = np.isfinite(depth_image) & (depth_image > 0)
    points = camera.pixel_rays()[valid] * depth_image[valid, None]
    if pose is None:
        points = camera.to_sensor(points)
    else:
        points = pose.to_world(points @ camera.rotation.T)
    return NavigabilityCloud(points, nav_image[valid])


def save_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write an 8-bit image as a plain-text portable graymap."""

    image = np.asarray(image, dtype=np.uint8)
    height, width = image.shape
    rows = "\n".join(" ".join(str(value) for value in row) for row in image)
    try:
        Path(path).write_text(f"P2\n{width} {height}\n255\n{rows}\n")
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err
