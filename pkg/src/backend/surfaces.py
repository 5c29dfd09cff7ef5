"""Spherical surfaces built from pointclouds, and the training sets derived from them.

All clouds here are in the sensor frame: origin at the LiDAR optical centre,
x forward, y left, z up.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from backend.errors import InvalidArgumentError, OutputError
from backend.gp import SgpModel, TrainingSet, predict_arrays

logger = logging.getLogger(__name__)

# directions closer than this (rad) count as the same direction
DIRECTION_QUANTUM = 1e-6


@dataclass(frozen=True)
class SphericalPoint:
    """A point in spherical coordinates."""

    azimuth: float
    elevation: float
    radius: float

    def to_cartesian(self) -> np.ndarray:
        return spherical_to_cartesian(self.azimuth, self.elevation, self.radius)


@dataclass(frozen=True)
class FieldOfView:
    """Angular extents of a sensor in the sensor frame (radians)."""

    azimuth_min: float
    azimuth_max: float
    elevation_min: float
    elevation_max: float

    def __post_init__(self) -> None:
        if not (self.azimuth_min < self.azimuth_max and self.elevation_min < self.elevation_max):
            raise InvalidArgumentError("field of view must be nonempty")

    @classmethod
    def centred(cls, horizontal: float, vertical: float, pitch: float = 0.0) -> "FieldOfView":
        """FoV of a forward-looking camera pitched down by `pitch`."""

        return cls(-horizontal / 2, horizontal / 2, -vertical / 2 - pitch, vertical / 2 - pitch)

    def contains(self, azimuth, elevation) -> np.ndarray:
        azimuth = np.asarray(azimuth)
        elevation = np.asarray(elevation)
        return (
            (azimuth >= self.azimuth_min)
            & (azimuth <= self.azimuth_max)
            & (elevation >= self.elevation_min)
            & (elevation <= self.elevation_max)
        )


@dataclass(frozen=True, eq=False)
class OccupancySurface:
    """Occupancy values Omega = rho_g - rho on a sphere of radius rho_g."""

    surface_radius: float
    azimuth: np.ndarray
    elevation: np.ndarray
    occupancy: np.ndarray

    def __len__(self) -> int:
        return len(self.occupancy)

    @property
    def inputs(self) -> np.ndarray:
        return np.column_stack([self.azimuth, self.elevation])

    @property
    def radius(self) -> np.ndarray:
        return self.surface_radius - self.occupancy

    @property
    def span(self) -> tuple[float, float, float, float]:
        """(azimuth min, azimuth max, elevation min, elevation max); all zeros when empty."""

        if len(self) == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return (
            float(self.azimuth.min()),
            float(self.azimuth.max()),
            float(self.elevation.min()),
            float(self.elevation.max()),
        )

    def training_set(self, noise_variance: float, max_points: int = 0) -> TrainingSet | None:
        """Geometric data set for the occupancy model, or None when the surface is empty."""

        if len(self) == 0:
            return None
        return TrainingSet(self.inputs, self.occupancy, noise_variance).subsample(max_points)


@dataclass(frozen=True, eq=False)
class VisualSurface:
    """Navigability points (alpha, beta, rho, iota) on a sphere of radius rho_v."""

    surface_radius: float
    azimuth: np.ndarray
    elevation: np.ndarray
    radius: np.ndarray
    navigability: np.ndarray
    fov: FieldOfView

    def __len__(self) -> int:
        return len(self.navigability)

    @property
    def inputs(self) -> np.ndarray:
        return np.column_stack([self.azimuth, self.elevation])


def cartesian_to_spherical(p) -> SphericalPoint:
    """Convert one Cartesian point to spherical coordinates.

    Raises:
        InvalidArgumentError: if `p` is not finite or is the zero vector
    """

    p = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError("point must be finite")
    radius = float(np.linalg.norm(p))
    if radius == 0:
        raise InvalidArgumentError("cannot project the zero vector")
    azimuth, elevation, _ = to_spherical(p.reshape(1, 3))
    return SphericalPoint(float(azimuth[0]), float(elevation[0]), radius)


def to_spherical(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised spherical projection of (n, 3) points; zero-radius points get elevation 0."""

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    radius = np.linalg.norm(points, axis=1)
    azimuth = np.arctan2(points[:, 1], points[:, 0])
    # atan2 returns pi for the negative x axis; fold it onto the half-open range
    azimuth = np.where(azimuth >= np.pi, -np.pi, azimuth)
    with np.errstate(invalid="ignore", divide="ignore"):
        elevation = np.where(radius > 0, np.arcsin(np.clip(points[:, 2] / radius, -1.0, 1.0)), 0.0)
    return azimuth, elevation, radius


def spherical_to_cartesian(azimuth, elevation, radius) -> np.ndarray:
    """Inverse of `to_spherical`; broadcasts and returns (..., 3)."""

    azimuth, elevation, radius = np.broadcast_arrays(
        np.asarray(azimuth, dtype=float), np.asarray(elevation, dtype=float), np.asarray(radius, dtype=float)
    )
    cos_el = np.cos(elevation)
    return np.stack(
        [radius * cos_el * np.cos(azimuth), radius * cos_el * np.sin(azimuth), radius * np.sin(elevation)],
        axis=-1,
    )


def _nearest_per_direction(azimuth: np.ndarray, elevation: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Indices keeping, for each quantised direction, the point with the smallest radius."""

    keys = np.round(np.column_stack([azimuth, elevation]) / DIRECTION_QUANTUM).astype(np.int64)
    order = np.lexsort((radius, keys[:, 1], keys[:, 0]))
    sorted_keys = keys[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
    return np.sort(order[first])


def build_occupancy_surface(cloud, surface_radius: float) -> OccupancySurface:
    """Project a sensor-frame cloud onto the occupancy surface.

    Points at or beyond `surface_radius` and zero-range points are discarded;
    when several points share a direction the nearest one is kept.

    Args:
        cloud: (n, 3) points
        surface_radius: rho_g in meters

    Returns:
        occupancy surface, empty for an empty cloud
    """

    if surface_radius <= 0:
        raise InvalidArgumentError("surface radius must be positive")
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    cloud = cloud[np.all(np.isfinite(cloud), axis=1)]
    azimuth, elevation, radius = to_spherical(cloud)
    keep = (radius > 0) & (radius < surface_radius)
    azimuth, elevation, radius = azimuth[keep], elevation[keep], radius[keep]
    index = _nearest_per_direction(azimuth, elevation, radius)
    return OccupancySurface(
        float(surface_radius), azimuth[index], elevation[index], surface_radius - radius[index]
    )


def build_visual_surface(nav_cloud, surface_radius: float, fov: FieldOfView) -> VisualSurface:
    """Project a navigability cloud onto the visual surface, clipped to the camera FoV.

    Args:
        nav_cloud: a NavigabilityCloud, or a (points, iota) pair, in the sensor frame
        surface_radius: rho_v in meters
        fov: camera field of view in the sensor frame

    Returns:
        visual surface
    """

    points, iota = (nav_cloud.points, nav_cloud.iota) if hasattr(nav_cloud, "iota") else nav_cloud
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    iota = np.asarray(iota).reshape(-1)
    azimuth, elevation, radius = to_spherical(points)
    keep = (radius > 0) & (radius <= surface_radius) & fov.contains(azimuth, elevation)
    return VisualSurface(
        float(surface_radius),
        azimuth[keep],
        elevation[keep],
        radius[keep],
        iota[keep].astype(np.uint8),
        fov,
    )


def split_visual_datasets(
    surface: VisualSurface,
    depth_cutoff: float,
    nav_noise: float = 0.01,
    depth_noise: float = 0.01,
    max_points: int = 0,
) -> tuple[TrainingSet | None, TrainingSet | None]:
    """Decompose a visual surface into the navigability and depth data sets.

    The navigability set holds every point with target iota / 255; the depth set
    holds the points nearer than `depth_cutoff` with target rho_v - rho. An empty
    set is returned as None.
    """

    if depth_cutoff <= 0:
        raise InvalidArgumentError("depth cutoff must be positive")
    if len(surface) == 0:
        return None, None
    inputs = surface.inputs
    nav_set = TrainingSet(inputs, surface.navigability / 255.0, nav_noise).subsample(max_points)
    near = surface.radius < depth_cutoff
    depth_set = None
    if np.any(near):
        depth_set = TrainingSet(
            inputs[near], surface.surface_radius - surface.radius[near], depth_noise
        ).subsample(max_points)
    return nav_set, depth_set


@dataclass(frozen=True, eq=False)
class AngularLattice:
    """Regular azimuth x elevation lattice."""

    azimuths: np.ndarray
    elevations: np.ndarray

    @classmethod
    def regular(
        cls,
        elevation_min: float,
        elevation_max: float,
        resolution: float = np.radians(1.0),
        azimuth_min: float = -np.pi,
        azimuth_max: float = np.pi,
    ) -> "AngularLattice":
        """Lattice at `resolution` spacing; a full circle is covered without duplicating +-pi."""

        full_circle = np.isclose(azimuth_max - azimuth_min, 2 * np.pi)
        n_az = int(round((azimuth_max - azimuth_min) / resolution)) + (0 if full_circle else 1)
        azimuths = azimuth_min + np.arange(n_az) * resolution
        n_el = int(round((elevation_max - elevation_min) / resolution)) + 1
        elevations = elevation_min + np.arange(n_el) * resolution
        return cls(azimuths, elevations)

    @property
    def shape(self) -> tuple[int, int]:
        """(number of elevations, number of azimuths)."""

        return len(self.elevations), len(self.azimuths)

    def nodes(self) -> np.ndarray:
        """(n_el * n_az, 2) nodes, elevation-major."""

        az, el = np.meshgrid(self.azimuths, self.elevations)
        return np.column_stack([az.ravel(), el.ravel()])


@dataclass(frozen=True, eq=False)
class LatticePrediction:
    """Predicted means and variances on a lattice, each shaped (n_el, n_az)."""

    lattice: AngularLattice
    mean: np.ndarray
    variance: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        """(azimuth, elevation, variance) triples, elevation-major."""

        nodes = self.lattice.nodes()
        return [(float(a), float(e), float(v)) for (a, e), v in zip(nodes, self.variance.ravel())]


def predict_lattice(model: SgpModel, lattice: AngularLattice) -> LatticePrediction:
    """Predict a model on every lattice node."""

    mean, variance = predict_arrays(model, lattice.nodes())
    return LatticePrediction(lattice, mean.reshape(lattice.shape), variance.reshape(lattice.shape))


def variance_surface(model: SgpModel, grid: AngularLattice) -> LatticePrediction:
    """Per-node predictive variance of an occupancy model; high variance marks free space."""

    return predict_lattice(model, grid)


def reconstruct_cloud(model: SgpModel, surface: OccupancySurface) -> np.ndarray:
    """Predicted points rho_hat = rho_g - Omega_hat along the surface's own directions."""

    mean, _ = predict_arrays(model, surface.inputs)
    radius = surface.surface_radius - mean
    return spherical_to_cartesian(surface.azimuth, surface.elevation, radius)


def reconstruct_visual_cloud(
    depth_model: SgpModel,
    nav_model: SgpModel,
    lattice: AngularLattice,
    surface_radius: float,
    depth_cutoff: float,
    depth_variance_threshold: float,
    nav_threshold: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Combined depth and navigability prediction over a lattice.

    Only certain points are kept: predicted range within `depth_cutoff` and depth
    variance below `depth_variance_threshold` (absolute).

    Returns:
        (points (k, 3), iota (k,) in {0, 255})
    """

    depth = predict_lattice(depth_model, lattice)
    radius = surface_radius - depth.mean.ravel()
    certain = (radius > 0) & (radius <= depth_cutoff) & (depth.variance.ravel() < depth_variance_threshold)
    nodes = lattice.nodes()[certain]
    nav_mean, _ = predict_arrays(nav_model, nodes)
    iota = np.where(nav_mean > nav_threshold, 255, 0).astype(np.uint8)
    return spherical_to_cartesian(nodes[:, 0], nodes[:, 1], radius[certain]), iota


def load_cloud(path: str | Path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a whitespace-delimited `x y z [iota]` file.

    Returns:
        (points (n, 3), iota (n,) or None when the file has three columns)
    """

    try:
        data = np.loadtxt(path, ndmin=2)
    except OSError as err:
        raise OutputError(path, str(err)) from err
    if data.size == 0:
        return np.empty((0, 3)), None
    if data.shape[1] not in (3, 4):
        raise InvalidArgumentError(f"{path}: expected 3 or 4 columns, got {data.shape[1]}")
    iota = data[:, 3].astype(np.uint8) if data.shape[1] == 4 else None
    return data[:, :3], iota


def save_cloud(path: str | Path, points: np.ndarray, iota: np.ndarray | None = None) -> None:
    """Write points (and optional navigability) in the `x y z [iota]` format."""

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    columns = points if iota is None else np.column_stack([points, np.asarray(iota)])
    fmt = ["%.6f"] * 3 + ([] if iota is None else ["%d"])
    try:
        np.savetxt(path, columns, fmt=fmt)
    except OSError as err:
        raise OutputError(path, str(err)) from err
    logger.info("wrote %d points to %s", len(points), path)


def save_occupancy_surface(path: str | Path, surface: OccupancySurface) -> None:
    """Export a surface as the Cartesian points it encodes."""

    save_cloud(path, spherical_to_cartesian(surface.azimuth, surface.elevation, surface.radius))
