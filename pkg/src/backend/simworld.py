"""Deterministic ground-truth world: heightfield terrain with semantic classes,
raycast sensors and unicycle kinematics.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from matplotlib.path import Path as Polygon

from backend.errors import InvalidArgumentError, OutOfBoundsError, OutputError
from backend.math import Pose, wrap_angle

logger = logging.getLogger(__name__)

BISECTION_STEPS = 30


@dataclass(frozen=True, eq=False)
class World:
    """Heightfield and class grid sampled on the same regular node grid.

    Node (i, j) sits at (origin[0] + j * cell_size, origin[1] + i * cell_size).

    Attributes:
        heights: (rows, cols) terrain elevations in meters
        classes: (rows, cols) indices into `class_names`
        cell_size: node spacing in meters
        origin: world coordinates of node (0, 0)
        class_names: semantic class labels
        regions: named polygons, (k, 2) vertex arrays, used for metric bookkeeping
        spawn: optional default robot spawn (x, y, heading)
        goal: optional default goal (x, y)
    """

    heights: np.ndarray
    classes: np.ndarray
    cell_size: float
    origin: tuple[float, float] = (0.0, 0.0)
    class_names: tuple[str, ...] = ("grass",)
    regions: dict[str, np.ndarray] = field(default_factory=dict)
    spawn: tuple[float, float, float] | None = None
    goal: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        heights = np.asarray(self.heights, dtype=float)
        classes = np.asarray(self.classes, dtype=np.int32)
        if heights.ndim != 2 or heights.shape != classes.shape:
            raise InvalidArgumentError("heightfield and class grid must be 2-D with equal shapes")
        if min(heights.shape) < 2:
            raise InvalidArgumentError("the grid needs at least 2 x 2 nodes")
        if self.cell_size <= 0:
            raise InvalidArgumentError("cell size must be positive")
        if classes.min() < 0 or classes.max() >= len(self.class_names):
            raise InvalidArgumentError("class grid references an unnamed class")
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(
            self, "regions", {name: np.asarray(poly, dtype=float).reshape(-1, 2) for name, poly in self.regions.items()}
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x min, x max, y min, y max)."""

        rows, cols = self.shape
        x0, y0 = self.origin
        return x0, x0 + (cols - 1) * self.cell_size, y0, y0 + (rows - 1) * self.cell_size

    @property
    def max_height(self) -> float:
        return float(self.heights.max())

    def contains(self, x, y) -> np.ndarray:
        x_min, x_max, y_min, y_max = self.bounds
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x_min) & (x <= x_max) & (y >= y_min) & (y <= y_max)

    def _cell(self, x, y):
        rows, cols = self.shape
        fx = (np.asarray(x, dtype=float) - self.origin[0]) / self.cell_size
        fy = (np.asarray(y, dtype=float) - self.origin[1]) / self.cell_size
        j = np.clip(np.floor(fx), 0, cols - 2).astype(int)
        i = np.clip(np.floor(fy), 0, rows - 2).astype(int)
        tx = np.clip(fx - j, 0.0, 1.0)
        ty = np.clip(fy - i, 0.0, 1.0)
        return i, j, tx, ty

    def height_at(self, x, y) -> np.ndarray:
        """Bilinear terrain height; points outside the grid take the edge value."""

        i, j, tx, ty = self._cell(x, y)
        h = self.heights
        return (
            (1 - ty) * ((1 - tx) * h[i, j] + tx * h[i, j + 1])
            + ty * ((1 - tx) * h[i + 1, j] + tx * h[i + 1, j + 1])
        )

    def gradient_at(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Analytic gradient (dh/dx, dh/dy) of the bilinear heightfield."""

        i, j, tx, ty = self._cell(x, y)
        h = self.heights
        dx = ((1 - ty) * (h[i, j + 1] - h[i, j]) + ty * (h[i + 1, j + 1] - h[i + 1, j])) / self.cell_size
        dy = ((1 - tx) * (h[i + 1, j] - h[i, j]) + tx * (h[i + 1, j + 1] - h[i, j + 1])) / self.cell_size
        return dx, dy

    def class_index_at(self, x, y) -> np.ndarray:
        """Class index of the nearest grid node."""

        rows, cols = self.shape
        j = np.clip(np.round((np.asarray(x, dtype=float) - self.origin[0]) / self.cell_size), 0, cols - 1).astype(int)
        i = np.clip(np.round((np.asarray(y, dtype=float) - self.origin[1]) / self.cell_size), 0, rows - 1).astype(int)
        return self.classes[i, j]

    def class_at(self, x: float, y: float) -> str:
        return self.class_names[int(self.class_index_at(x, y))]

    def slope_angles(self, x: float, y: float, heading: float) -> tuple[float, float]:
        """(pitch, roll) in radians of the terrain under a robot at (x, y) facing `heading`."""

        dx, dy = self.gradient_at(x, y)
        along = float(dx * np.cos(heading) + dy * np.sin(heading))
        across = float(-dx * np.sin(heading) + dy * np.cos(heading))
        return float(np.arctan(along)), float(np.arctan(across))


@dataclass(frozen=True)
class LidarModel:
    """Spinning multi-channel LiDAR.

    Attributes:
        channels: number of elevation angles, evenly spread over the elevation span
        elevation_min: lowest channel elevation (rad)
        elevation_max: highest channel elevation (rad)
        azimuth_step: azimuth spacing between rays (rad)
        max_range: maximum return range (m)
        noise_sigma: Gaussian range noise (m)
        mount_height: sensor height above the ground contact point (m)
    """

    channels: int = 16
    elevation_min: float = np.radians(-15.0)
    elevation_max: float = np.radians(15.0)
    azimuth_step: float = np.radians(2.0)
    max_range: float = 20.0
    noise_sigma: float = 0.0
    mount_height: float = 0.5

    def __post_init__(self) -> None:
        if self.channels < 1:
            raise InvalidArgumentError("a LiDAR needs at least one channel")
        if self.azimuth_step <= 0 or self.max_range <= 0 or self.noise_sigma < 0:
            raise InvalidArgumentError("invalid LiDAR model")

    @property
    def elevations(self) -> np.ndarray:
        if self.channels == 1:
            return np.array([self.elevation_min])
        return np.linspace(self.elevation_min, self.elevation_max, self.channels)

    @property
    def azimuths(self) -> np.ndarray:
        count = int(round(2 * np.pi / self.azimuth_step))
        return -np.pi + np.arange(count) * (2 * np.pi / count)

    def directions(self) -> np.ndarray:
        """(channels * azimuths, 3) unit ray directions in the sensor frame, channel-major."""

        el, az = np.meshgrid(self.elevations, self.azimuths, indexing="ij")
        el, az = el.ravel(), az.ravel()
        return np.column_stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


@dataclass(frozen=True, eq=False)
class RobotState:
    """Robot pose, last applied velocities and the stuck flag."""

    pose: Pose
    linear_vel: float = 0.0
    angular_vel: float = 0.0
    stuck: bool = False


def raycast_many(
    world: World, origins: np.ndarray, directions: np.ndarray, max_range: float, step: float | None = None
) -> np.ndarray:
    """First terrain intersection of many rays.

    Fixed-step marching finds the first step below the terrain, then bisection
    refines the crossing. Rays leaving the world are misses.

    Args:
        world: terrain
        origins: (n, 3) ray origins, above the terrain
        directions: (n, 3) unit directions
        max_range: marching limit (m)
        step: marching step; defaults to min(cell_size / 2, 0.1)

    Returns:
        (n,) hit distances, NaN for misses
    """

    origins = np.broadcast_to(np.asarray(origins, dtype=float), np.shape(directions))
    directions = np.asarray(directions, dtype=float)
    step = step or min(world.cell_size / 2, 0.1)
    count = len(directions)
    hit = np.full(count, np.nan)
    active = np.ones(count, dtype=bool)
    ceiling = world.max_height

    def below(index: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = origins[index] + t[:, None] * directions[index]
        inside = world.contains(points[:, 0], points[:, 1])
        under = inside & (points[:, 2] <= world.height_at(points[:, 0], points[:, 1]))
        escaped = ~inside | ((points[:, 2] > ceiling) & (directions[index, 2] >= 0))
        return under, escaped

    n_steps = int(np.ceil(max_range / step))
    for k in range(1, n_steps + 1):
        index = np.flatnonzero(active)
        if index.size == 0:
            break
        t = np.full(index.size, min(k * step, max_range))
        under, escaped = below(index, t)
        hit[index[under]] = t[under]
        active[index[under | escaped]] = False

    index = np.flatnonzero(~np.isnan(hit))
    if index.size:
        hi = hit[index]
        lo = np.maximum(hi - step, 0.0)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            under, _ = below(index, mid)
            hi = np.where(under, mid, hi)
            lo = np.where(under, lo, mid)
        hit[index] = hi
    return hit


def raycast(world: World, origin, direction, max_range: float) -> float | None:
    """Distance to the first terrain hit along a ray, or None for a miss."""

    direction = np.asarray(direction, dtype=float).reshape(1, 3)
    distance = raycast_many(world, np.asarray(origin, dtype=float).reshape(1, 3), direction, max_range)[0]
    return None if np.isnan(distance) else float(distance)


def sensor_origin(pose: Pose, mount_height: float) -> np.ndarray:
    return pose.position + np.array([0.0, 0.0, mount_height])


def simulate_lidar(world: World, robot: RobotState, model: LidarModel, seed) -> np.ndarray:
    """Simulated LiDAR scan in the sensor frame.

    One ray per (channel, azimuth); hits get seeded Gaussian range noise and
    misses are omitted.

    Args:
        world: terrain
        robot: robot state; the sensor sits `model.mount_height` above its position
        model: LiDAR model
        seed: seed (or seed sequence) for the range noise

    Returns:
        (k, 3) points
    """

    directions = model.directions()
    origin = sensor_origin(robot.pose, model.mount_height)
    ranges = raycast_many(world, origin, robot.pose.direction_to_world(directions), model.max_range)
    if model.noise_sigma > 0:
        ranges = ranges + np.random.default_rng(seed).normal(0.0, model.noise_sigma, len(ranges))
    keep = np.isfinite(ranges) & (ranges > 0)
    return directions[keep] * ranges[keep, None]


def step_robot(
    state: RobotState, cmd, dt: float, world: World, climb_limit: float = np.radians(20.0)
) -> RobotState:
    """Integrate a unicycle command over `dt`.

    The heading turns first, then the robot advances along the new heading and
    snaps to the terrain. A robot whose pitch or roll exceeds `climb_limit` becomes
    stuck and stays stuck; a stuck robot can turn but not move.

    Raises:
        InvalidArgumentError: if `dt` is not positive
        OutOfBoundsError: if the step leaves the world
    """

    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    pose = state.pose
    heading = float(wrap_angle(pose.heading + cmd.angular * dt))
    linear = 0.0 if state.stuck else max(cmd.linear, 0.0)
    x = pose.x + linear * dt * np.cos(heading)
    y = pose.y + linear * dt * np.sin(heading)
    if not world.contains(x, y):
        raise OutOfBoundsError(x, y)
    z = float(world.height_at(x, y))
    pitch, roll = world.slope_angles(x, y, heading)
    stuck = state.stuck or max(abs(pitch), abs(roll)) > climb_limit
    if stuck and not state.stuck:
        logger.debug("robot stuck at (%.2f, %.2f): pitch %.1f deg, roll %.1f deg", x, y, np.degrees(pitch), np.degrees(roll))
    return replace(
        state,
        pose=Pose((x, y, z), heading),
        linear_vel=linear,
        angular_vel=cmd.angular,
        stuck=stuck,
    )


def region_events(trajectory: list[Pose], world: World) -> dict[str, bool]:
    """For each named region, whether any trajectory pose lies inside it."""

    if not trajectory:
        return {name: False for name in world.regions}
    xy = np.array([[pose.x, pose.y] for pose in trajectory])
    return {name: bool(np.any(Polygon(polygon).contains_points(xy))) for name, polygon in world.regions.items()}


def save_world(world: World, path: str | Path) -> None:
    """Write a world file: grid size, cell size, row-major heights and classes, regions."""

    rows, cols = world.shape
    document = {
        "rows": rows,
        "cols": cols,
        "cell_size": world.cell_size,
        "origin": list(world.origin),
        "class_names": list(world.class_names),
        "heights": np.round(world.heights.ravel(), 6).tolist(),
        "classes": world.classes.ravel().tolist(),
        "regions": {name: polygon.tolist() for name, polygon in world.regions.items()},
        "spawn": list(world.spawn) if world.spawn is not None else None,
        "goal": list(world.goal) if world.goal is not None else None,
    }
    try:
        Path(path).write_text(json.dumps(document))
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err
    logger.info("wrote world %dx%d to %s", rows, cols, path)


def load_world(path: str | Path) -> World:
    """Read a world file written by `save_world`."""

    try:
        document = json.loads(Path(path).read_text())
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err
    except json.JSONDecodeError as err:
        raise InvalidArgumentError(f"{path}: not a world file ({err})") from err
    shape = (document["rows"], document["cols"])
    return World(
        heights=np.asarray(document["heights"], dtype=float).reshape(shape),
        classes=np.asarray(document["classes"], dtype=np.int32).reshape(shape),
        cell_size=float(document["cell_size"]),
        origin=tuple(document.get("origin", (0.0, 0.0))),
        class_names=tuple(document["class_names"]),
        regions=document.get("regions", {}),
        spawn=tuple(document["spawn"]) if document.get("spawn") else None,
        goal=tuple(document["goal"]) if document.get("goal") else None,
    )
