"""Local navigation point (LNP) extraction, navigability assessment, cost-based
selection and the velocity law.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from backend.enums import Navigability, PlannerMode
from backend.errors import InvalidArgumentError
from backend.gp import SgpModel, classify_many, predict_arrays
from backend.math import Pose
from backend.surfaces import FieldOfView, LatticePrediction, spherical_to_cartesian

logger = logging.getLogger(__name__)

__all__ = [
    "Lnp",
    "MotionCommand",
    "PlannerConfig",
    "Pose",
    "assess_navigability",
    "extract_g_lnps",
    "extract_v_lnps",
    "goal_cost",
    "lnp_cost",
    "motion_command",
    "recovery_command",
    "score_lnps",
    "select_lnp",
]


@dataclass(frozen=True)
class PlannerConfig:
    """Planner parameters.

    Attributes:
        free_variance_threshold: V_g_th; a fraction of the occupancy model's prior
            variance unless `absolute_thresholds` is set
        depth_variance_threshold: V_d_th, interpreted like `free_variance_threshold`
        absolute_thresholds: read the variance thresholds as absolute values
        nav_threshold: mean above which a direction is navigable
        elevation_bounds: safe elevations (min, max) in radians, exclusive; the minimum
            must not lie below the lowest LiDAR channel, where nothing is observed
        cost_weights: (k_dst, k_dir, k_elv); normalized to sum to 1
        nav_preference: k_nav in [0.5, 1]
        control_gains: (k_a, k_b, k_c)
        v_max: linear velocity limit (m/s)
        occupancy_radius: rho_g (m)
        visual_radius: rho_v (m)
        depth_cutoff: rho_d (m)
        goal_distance: straight-line start-goal distance used to normalize the distance term
        sensor_height: LiDAR height above the ground contact point (m)
        lookahead: ground distances (m) at which G-LNP navigability is sampled
        recovery: rotate in place when no LNP is viable; None takes the mode's default
    """

    free_variance_threshold: float = 0.5
    depth_variance_threshold: float = 0.5
    absolute_thresholds: bool = False
    nav_threshold: float = 0.5
    elevation_bounds: tuple[float, float] = (np.radians(-15.0), np.radians(5.0))
    cost_weights: tuple[float, float, float] = (0.6, 0.3, 0.1)
    nav_preference: float = 0.5
    control_gains: tuple[float, float, float] = (0.1, 0.5, 0.8)
    v_max: float = 1.2
    occupancy_radius: float = 20.0
    visual_radius: float = 20.0
    depth_cutoff: float = 8.0
    goal_distance: float = 0.0
    sensor_height: float = 0.5
    lookahead: tuple[float, ...] = (1.5, 3.0, 5.0)
    recovery: bool | None = None

    def __post_init__(self) -> None:
        problems = self.problems()
        if problems:
            raise InvalidArgumentError("; ".join(problems))

    def problems(self) -> list[str]:
        problems = []
        low, high = self.elevation_bounds
        if not low < high:
            problems.append("elevation bounds must satisfy min < max")
        if not 0.5 <= self.nav_preference <= 1.0:
            problems.append("nav_preference must lie in [0.5, 1]")
        if any(w < 0 for w in self.cost_weights) or sum(self.cost_weights) <= 0:
            problems.append("cost weights must be non-negative with a positive sum")
        if any(k <= 0 for k in self.control_gains):
            problems.append("control gains must be positive")
        if self.v_max <= 0:
            problems.append("v_max must be positive")
        if self.free_variance_threshold <= 0 or self.depth_variance_threshold <= 0:
            problems.append("variance thresholds must be positive")
        if min(self.occupancy_radius, self.visual_radius, self.depth_cutoff) <= 0:
            problems.append("surface radii must be positive")
        if self.depth_cutoff > self.visual_radius:
            problems.append("depth cutoff must not exceed the visual surface radius")
        if self.goal_distance < 0:
            problems.append("goal distance must be non-negative")
        return problems

    @classmethod
    def preset(cls, name: str, **overrides) -> "PlannerConfig":
        """Named parameter sets: "simulation" and "real_world" (v_max 0.5 m/s)."""

        match name:
            case "simulation":
                return cls(**overrides)
            case "real_world":
                return cls(**{"v_max": 0.5, **overrides})
            case _:
                raise InvalidArgumentError(f"unknown planner preset '{name}'")

    @property
    def weights(self) -> np.ndarray:
        weights = np.asarray(self.cost_weights, dtype=float)
        return weights / weights.sum()

    def free_threshold(self, model: SgpModel) -> float:
        if self.absolute_thresholds:
            return self.free_variance_threshold
        return self.free_variance_threshold * model.prior_variance

    def depth_threshold(self, model: SgpModel) -> float:
        if self.absolute_thresholds:
            return self.depth_variance_threshold
        return self.depth_variance_threshold * model.prior_variance

    def recovery_enabled(self, mode: PlannerMode) -> bool:
        return mode.recovery if self.recovery is None else self.recovery


@dataclass(frozen=True)
class Lnp:
    """A local navigation point in the sensor frame.

    `navigability` is None until assessed; `cost` is None until scored.
    """

    azimuth: float
    elevation: float
    range: float
    world_xyz: tuple[float, float, float]
    navigability: Navigability | None = None
    cost: float | None = None


@dataclass(frozen=True)
class MotionCommand:
    linear: float
    angular: float


def _check_full_circle(azimuths: np.ndarray) -> None:
    if len(azimuths) < 2:
        raise InvalidArgumentError("the variance surface must cover the full azimuth circle")
    step = float(np.min(np.diff(np.sort(azimuths))))
    span = float(np.ptp(azimuths)) + step
    if not np.isclose(span, 2 * np.pi, atol=1e-6):
        raise InvalidArgumentError("the variance surface must cover the full azimuth circle")


def _make_lnps(
    azimuth: np.ndarray, elevation: np.ndarray, radius: np.ndarray, robot: Pose, sensor_height: float
) -> list[Lnp]:
    local = spherical_to_cartesian(azimuth, elevation, radius).reshape(-1, 3) + np.array([0.0, 0.0, sensor_height])
    world = robot.to_world(local)
    return [
        Lnp(float(a), float(e), float(r), tuple(float(c) for c in xyz))
        for a, e, r, xyz in zip(azimuth, elevation, radius, world)
    ]


def extract_g_lnps(var_surface: LatticePrediction, occ_model: SgpModel, cfg: PlannerConfig, robot: Pose) -> list[Lnp]:
    """Lowest free node per azimuth column of the occupancy variance surface.

    A node is free when its variance exceeds V_g_th; only nodes strictly within the
    safe elevation bounds qualify. Ranges come from the occupancy model,
    rho = rho_g - Omega_hat, clamped to [0, rho_g].

    Args:
        var_surface: occupancy model prediction over a full-circle lattice
        occ_model: the occupancy model
        cfg: planner configuration
        robot: robot pose, for world coordinates

    Returns:
        G-LNPs; empty when every direction is blocked
    """

    lattice = var_surface.lattice
    _check_full_circle(lattice.azimuths)
    low, high = cfg.elevation_bounds
    admissible = (lattice.elevations > low) & (lattice.elevations < high)
    order = np.argsort(lattice.elevations)
    free = (var_surface.variance > cfg.free_threshold(occ_model)) & admissible[:, None]
    free = free[order]
    has_free = free.any(axis=0)
    if not has_free.any():
        return []
    columns = np.flatnonzero(has_free)
    rows = order[free[:, columns].argmax(axis=0)]
    azimuth = lattice.azimuths[columns]
    elevation = lattice.elevations[rows]
    mean, _ = predict_arrays(occ_model, np.column_stack([azimuth, elevation]))
    radius = np.clip(cfg.occupancy_radius - mean, 0.0, cfg.occupancy_radius)
    lnps = _make_lnps(azimuth, elevation, radius, robot, cfg.sensor_height)
    logger.debug("extracted %d G-LNPs from %d azimuth columns", len(lnps), len(lattice.azimuths))
    return lnps


def extract_v_lnps(depth_surface: LatticePrediction, depth_model: SgpModel, cfg: PlannerConfig, robot: Pose) -> list[Lnp]:
    """Farthest certain depth-model point per azimuth column of a camera lattice.

    A node is certain when its depth variance is below V_d_th and its predicted
    range rho_v - mean lies in (0, rho_d]; only nodes strictly within the safe
    elevation bounds qualify.
    """

    lattice = depth_surface.lattice
    low, high = cfg.elevation_bounds
    admissible = (lattice.elevations > low) & (lattice.elevations < high)
    radius = cfg.visual_radius - depth_surface.mean
    certain = (
        (depth_surface.variance < cfg.depth_threshold(depth_model))
        & (radius > 0)
        & (radius <= cfg.depth_cutoff)
        & admissible[:, None]
    )
    has_certain = certain.any(axis=0)
    if not has_certain.any():
        return []
    columns = np.flatnonzero(has_certain)
    rows = np.where(certain, radius, -np.inf)[:, columns].argmax(axis=0)
    lnps = _make_lnps(
        lattice.azimuths[columns], lattice.elevations[rows], radius[rows, columns], robot, cfg.sensor_height
    )
    logger.debug("extracted %d V-LNPs", len(lnps))
    return lnps


def _lookahead_directions(lnp: Lnp, cfg: PlannerConfig) -> list[tuple[float, float]]:
    directions = [
        (lnp.azimuth, -float(np.arctan2(cfg.sensor_height, distance)))
        for distance in cfg.lookahead
        if distance < lnp.range
    ]
    if lnp.range <= cfg.depth_cutoff:
        directions.append((lnp.azimuth, lnp.elevation))
    return directions


def assess_navigability(
    lnps: list[Lnp],
    nav_model: SgpModel | None,
    depth_model: SgpModel | None,
    camera_fov: FieldOfView,
    cfg: PlannerConfig,
) -> list[Lnp]:
    """Annotate LNPs with their navigability.

    Without a depth model (G-LNPs), navigability is sampled along the LNP's azimuth
    on the ground at the lookahead distances nearer than the LNP, plus the LNP's
    own direction when it lies within the depth cutoff; the LNP is navigable iff
    every sample inside the camera FoV is. LNPs with no sample in the FoV are
    marked outside the FoV.

    With a depth model (V-LNPs), LNPs whose depth variance reaches V_d_th are
    dropped and the rest are classified in their own direction.
    """

    if depth_model is not None:
        if not lnps:
            return []
        directions = np.array([[lnp.azimuth, lnp.elevation] for lnp in lnps])
        _, variance = predict_arrays(depth_model, directions)
        certain = variance < cfg.depth_threshold(depth_model)
        lnps = [lnp for lnp, keep in zip(lnps, certain) if keep]
        samples = [[(lnp.azimuth, lnp.elevation)] for lnp in lnps]
    else:
        samples = [_lookahead_directions(lnp, cfg) for lnp in lnps]

    assessed = []
    for lnp, directions in zip(lnps, samples):
        inside = [(a, e) for a, e in directions if camera_fov.contains(a, e)]
        if nav_model is None or not inside:
            navigability = Navigability.OUTSIDE_FOV
        elif np.all(classify_many(nav_model, np.array(inside), cfg.nav_threshold)):
            navigability = Navigability.NAVIGABLE
        else:
            navigability = Navigability.NON_NAVIGABLE
        assessed.append(replace(lnp, navigability=navigability))
    return assessed


def goal_cost(lnp: Lnp, goal, cfg: PlannerConfig) -> float:
    """Weighted goal cost C_g in [0, 1].

    The distance term d_tg = rho + |goal - lnp| is normalized by rho_g plus the
    start-goal distance, |alpha| by pi and |beta| by the larger elevation bound.
    """

    x, y = float(goal[0]), float(goal[1])
    d_tg = lnp.range + float(np.hypot(x - lnp.world_xyz[0], y - lnp.world_xyz[1]))
    terms = np.array(
        [
            min(d_tg / (cfg.occupancy_radius + cfg.goal_distance), 1.0),
            abs(lnp.azimuth) / np.pi,
            min(abs(lnp.elevation) / max(abs(b) for b in cfg.elevation_bounds), 1.0),
        ]
    )
    return float(np.clip(cfg.weights @ terms, 0.0, 1.0))


def lnp_cost(lnp: Lnp, goal, mode: PlannerMode, cfg: PlannerConfig) -> float | None:
    """Mode-dependent cost of one LNP; None when the mode excludes it."""

    c_g = goal_cost(lnp, goal, cfg)
    match mode:
        case PlannerMode.G:
            return c_g
        case PlannerMode.V:
            match lnp.navigability:
                case Navigability.NAVIGABLE:
                    return c_g
                case Navigability.NON_NAVIGABLE:
                    return 1.0
                case _:
                    return None
        case PlannerMode.VG:
            match lnp.navigability:
                case Navigability.NAVIGABLE:
                    return (1 - cfg.nav_preference) * c_g
                case Navigability.NON_NAVIGABLE:
                    return 1.0
                case _:
                    return cfg.nav_preference * c_g


def score_lnps(lnps: list[Lnp], goal, mode: PlannerMode, cfg: PlannerConfig) -> list[Lnp]:
    """The LNPs the mode admits, each carrying its cost."""

    scored = []
    for lnp in lnps:
        cost = lnp_cost(lnp, goal, mode, cfg)
        if cost is not None:
            scored.append(replace(lnp, cost=cost))
    return scored


def select_lnp(lnps: list[Lnp], goal, mode: PlannerMode, cfg: PlannerConfig) -> Lnp | None:
    """Minimum-cost LNP, ties broken by smallest |azimuth| then smallest azimuth.

    Returns:
        the selected LNP with its cost, or None when no candidate costs less than 1
    """

    viable = [lnp for lnp in score_lnps(lnps, goal, mode, cfg) if lnp.cost < 1.0]
    if not viable:
        logger.debug("no viable LNP among %d candidates in %s mode", len(lnps), mode.key)
        return None
    best = min(viable, key=lambda lnp: (lnp.cost, abs(lnp.azimuth), lnp.azimuth))
    logger.debug(
        "selected LNP az %.1f deg el %.1f deg range %.2f m cost %.4f",
        np.degrees(best.azimuth),
        np.degrees(best.elevation),
        best.range,
        best.cost,
    )
    return best


def motion_command(selected: Lnp, cfg: PlannerConfig) -> MotionCommand:
    """v = clamp(k_a rho - k_b |alpha|, 0, v_max), omega = k_c alpha."""

    k_a, k_b, k_c = cfg.control_gains
    rho = min(max(selected.range, 0.0), cfg.occupancy_radius)
    linear = k_a * rho - k_b * abs(selected.azimuth)
    return MotionCommand(float(np.clip(linear, 0.0, cfg.v_max)), k_c * selected.azimuth)


def recovery_command(cfg: PlannerConfig) -> MotionCommand:
    """Rotate in place at k_c * pi / 2."""

    return MotionCommand(0.0, cfg.control_gains[2] * np.pi / 2)
