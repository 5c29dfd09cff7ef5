"""Scenario configuration: one JSON document describes one reproducible experiment.

Angles are given in degrees in the document (keys ending in `_deg`, and the
heading in `robot.spawn`) and held in radians once loaded.
"""

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from backend.enums import PlannerMode
from backend.errors import ConfigError, VgNavError
from backend.gp import OptimSettings, RqKernelParams
from backend.planner import PlannerConfig
from backend.simworld import LidarModel, World, load_world
from backend.vision import CameraModel, SemanticClassMap
from backend.worlds import generate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorldConfig:
    """A bundled generator with its parameters, or a world file."""

    generator: str = "flat"
    params: dict = field(default_factory=dict)
    file: str | None = None


@dataclass(frozen=True)
class RobotConfig:
    """Spawn pose (x, y, heading); None takes the world's default spawn.

    `spawn_jitter` is the (position, heading) half-width of the seeded uniform
    perturbation applied to the spawn of every trial.
    """

    spawn: tuple[float, float, float] | None = None
    spawn_jitter: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class SgpSettings:
    """Initial hyperparameters and fitting budget of one sparse GP model.

    Attributes:
        signal_variance: initial sigma^2
        length_scale: initial length scale (rad)
        mixture_weight: initial RQ mixture weight
        noise_variance: initial observation noise variance
        num_inducing: inducing points per fit (capped by the data size)
        inducing_init: "grid" or "subset"
        iterations: optimiser budget of a warm-started fit
        first_iterations: optimiser budget of the first fit of a trial
        max_training_points: evenly strided subsample size, 0 for all points
        bounds: (low, high) limits on learned hyperparameters, by name
        fixed: hyperparameters that are never learned
    """

    signal_variance: float = 1.0
    length_scale: float = 0.1
    mixture_weight: float = 1.0
    noise_variance: float = 0.01
    num_inducing: int = 100
    inducing_init: str = "grid"
    iterations: int = 5
    first_iterations: int = 30
    max_training_points: int = 1500
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict, compare=False)
    fixed: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        RqKernelParams(self.signal_variance, self.length_scale, self.mixture_weight)
        if not isinstance(self.bounds, dict):
            raise ValueError("bounds must map hyperparameter names to [low, high]")
        self.optim(first=False)
        settings = self.optim(first=True)
        object.__setattr__(self, "bounds", settings.bounds)
        object.__setattr__(self, "fixed", settings.fixed)
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        if self.num_inducing < 1:
            raise ValueError("num_inducing must be at least 1")
        if self.max_training_points < 0:
            raise ValueError("max_training_points must be non-negative")

    @property
    def kernel(self) -> RqKernelParams:
        return RqKernelParams(self.signal_variance, self.length_scale, self.mixture_weight)

    def optim(self, first: bool) -> OptimSettings:
        return OptimSettings(
            max_iterations=self.first_iterations if first else self.iterations,
            inducing_init=self.inducing_init,
            bounds=self.bounds,
            fixed=self.fixed,
        )


def _default_occupancy() -> SgpSettings:
    # sigma^2 is held: the free-space threshold is a fraction of the prior variance.
    # length scale and mixture weight keep correlation within a few degrees of the data
    return SgpSettings(
        signal_variance=20.0,
        noise_variance=0.05,
        num_inducing=150,
        iterations=3,
        max_training_points=800,
        bounds={"length_scale": (0.02, 0.1), "mixture_weight": (1.0, 100.0), "noise_variance": (1e-3, 1.0)},
        fixed=("signal_variance",),
    )


def _default_depth() -> SgpSettings:
    return SgpSettings(signal_variance=20.0, noise_variance=0.05)


@dataclass(frozen=True)
class SgpConfig:
    """Settings of the occupancy, navigability and depth models."""

    occupancy: SgpSettings = field(default_factory=_default_occupancy)
    navigability: SgpSettings = field(default_factory=lambda: SgpSettings(signal_variance=0.25))
    depth: SgpSettings = field(default_factory=_default_depth)


@dataclass(frozen=True)
class TerminationConfig:
    """When a trial ends.

    A trial succeeds within `goal_tolerance` of the goal; it fails when the robot
    has been stuck for `stuck_timeout` seconds, when it moved less than
    `progress_distance` over the last `progress_window` seconds, or after
    `trial_timeout` seconds.
    """

    goal_tolerance: float = 0.5
    stuck_timeout: float = 10.0
    trial_timeout: float = 300.0
    progress_window: float = 30.0
    progress_distance: float = 1.0
    climb_limit: float = np.radians(20.0)


@dataclass(frozen=True)
class SuiteConfig:
    trials: int = 15
    base_seed: int = 0
    jobs: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete experiment description."""

    name: str = "scenario"
    world: WorldConfig = field(default_factory=WorldConfig)
    robot: RobotConfig = field(default_factory=RobotConfig)
    goal: tuple[float, float] | None = None
    modes: tuple[PlannerMode, ...] = (PlannerMode.G, PlannerMode.V, PlannerMode.VG)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sgp: SgpConfig = field(default_factory=SgpConfig)
    lidar: LidarModel = field(default_factory=LidarModel)
    camera: CameraModel = field(default_factory=CameraModel)
    class_map: SemanticClassMap = field(
        default_factory=lambda: SemanticClassMap.from_dict({"grass": True, "mud": False, "asphalt": True})
    )
    termination: TerminationConfig = field(default_factory=TerminationConfig)
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    dt: float = 0.1
    lattice_resolution: float = np.radians(1.0)


def _degrees(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in np.radians(np.asarray(value, dtype=float)))
    return float(np.radians(float(value)))


def _spawn(value):
    if value is None:
        return None
    x, y, heading = (float(v) for v in value)
    return x, y, float(np.radians(heading))


def _jitter(value):
    distance, heading = (float(v) for v in value)
    return distance, float(np.radians(heading))


def _kwargs(cls, document, where: str, problems: list[str], renames: dict | None = None) -> dict | None:
    """Constructor arguments of dataclass `cls` from a JSON object, collecting problems."""

    renames = renames or {}
    if document is None:
        document = {}
    if not isinstance(document, dict):
        problems.append(f"{where}: expected an object")
        return None
    names = {f.name for f in fields(cls) if f.init}
    kwargs = {}
    for key, value in document.items():
        try:
            if key in renames:
                target, convert = renames[key]
                kwargs[target] = convert(value)
            elif key in names:
                kwargs[key] = tuple(value) if isinstance(value, list) else value
            else:
                problems.append(f"{where}: unknown key '{key}'")
        except (TypeError, ValueError) as err:
            problems.append(f"{where}.{key}: {err}")
    return kwargs


def _section(cls, document, where: str, problems: list[str], renames: dict | None = None):
    """Build dataclass `cls` from a JSON object, collecting problems instead of raising."""

    kwargs = _kwargs(cls, document, where, problems, renames)
    if kwargs is None:
        return None
    try:
        return cls(**kwargs)
    except (VgNavError, TypeError, ValueError) as err:
        problems.append(f"{where}: {err}")
        return None


def parse_config(document: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed JSON document.

    Raises:
        ConfigError: listing every problem found
    """

    if not isinstance(document, dict):
        raise ConfigError("a scenario document must be a JSON object")
    problems: list[str] = []
    kwargs = {}
    known = {f.name for f in fields(ScenarioConfig)} | {"lattice_resolution_deg"}
    problems += [f"unknown section '{key}'" for key in document if key not in known]

    if "name" in document:
        kwargs["name"] = str(document["name"])

    if "world" in document:
        world = _section(WorldConfig, document["world"], "world", problems)
        if world is not None and world.file is not None and base_dir is not None:
            world = replace(world, file=str((base_dir / world.file).resolve()))
        kwargs["world"] = world

    if "robot" in document:
        kwargs["robot"] = _section(
            RobotConfig,
            document["robot"],
            "robot",
            problems,
            {"spawn": ("spawn", _spawn), "spawn_jitter": ("spawn_jitter", _jitter)},
        )

    if document.get("goal") is not None:
        try:
            x, y = (float(v) for v in document["goal"])
            kwargs["goal"] = (x, y)
        except (TypeError, ValueError):
            problems.append("goal: expected [x, y]")

    if "modes" in document:
        try:
            kwargs["modes"] = tuple(PlannerMode.from_key(key) for key in document["modes"])
        except (TypeError, ValueError) as err:
            problems.append(f"modes: {err}")

    if "planner" in document:
        planner = dict(document["planner"] or {})
        preset = planner.pop("preset", "simulation")
        overrides = _kwargs(
            PlannerConfig, planner, "planner", problems, {"elevation_bounds_deg": ("elevation_bounds", _degrees)}
        )
        if overrides is not None:
            try:
                kwargs["planner"] = PlannerConfig.preset(preset, **overrides)
            except (VgNavError, TypeError) as err:
                problems.append(f"planner: {err}")

    if "sgp" in document:
        sgp = document["sgp"] or {}
        models = {}
        for key in sgp:
            if key not in ("occupancy", "navigability", "depth"):
                problems.append(f"sgp: unknown model '{key}'")
        for key, default in (
            ("occupancy", _default_occupancy()),
            ("navigability", SgpConfig().navigability),
            ("depth", _default_depth()),
        ):
            merged = {f.name: getattr(default, f.name) for f in fields(SgpSettings)} | dict(sgp.get(key) or {})
            models[key] = _section(SgpSettings, merged, f"sgp.{key}", problems)
        kwargs["sgp"] = SgpConfig(**models)

    if "lidar" in document:
        kwargs["lidar"] = _section(
            LidarModel,
            document["lidar"],
            "lidar",
            problems,
            {
                "elevation_min_deg": ("elevation_min", _degrees),
                "elevation_max_deg": ("elevation_max", _degrees),
                "azimuth_step_deg": ("azimuth_step", _degrees),
            },
        )

    if "camera" in document:
        kwargs["camera"] = _section(
            CameraModel,
            document["camera"],
            "camera",
            problems,
            {
                "horizontal_fov_deg": ("horizontal_fov", _degrees),
                "vertical_fov_deg": ("vertical_fov", _degrees),
                "pitch_deg": ("pitch", _degrees),
            },
        )

    if "class_map" in document:
        try:
            kwargs["class_map"] = SemanticClassMap.from_dict(dict(document["class_map"]))
        except (ConfigError, TypeError, ValueError) as err:
            problems.append(f"class_map: {err}")

    if "termination" in document:
        kwargs["termination"] = _section(
            TerminationConfig,
            document["termination"],
            "termination",
            problems,
            {"climb_limit_deg": ("climb_limit", _degrees)},
        )

    if "suite" in document:
        kwargs["suite"] = _section(SuiteConfig, document["suite"], "suite", problems)

    if "dt" in document:
        kwargs["dt"] = document["dt"]
    if "lattice_resolution_deg" in document:
        kwargs["lattice_resolution"] = _degrees(document["lattice_resolution_deg"])

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**kwargs)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and parse a scenario document; relative world files resolve against its directory."""

    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from err
    cfg = parse_config(document, path.parent)
    if cfg.name == "scenario":
        cfg = replace(cfg, name=path.stem)
    logger.debug("loaded scenario '%s' from %s", cfg.name, path)
    return cfg


def build_world(cfg: ScenarioConfig) -> World:
    if cfg.world.file is not None:
        return load_world(cfg.world.file)
    return generate(cfg.world.generator, **cfg.world.params)


def resolve_spawn(cfg: ScenarioConfig, world: World) -> tuple[float, float, float] | None:
    return cfg.robot.spawn if cfg.robot.spawn is not None else world.spawn


def resolve_goal(cfg: ScenarioConfig, world: World) -> tuple[float, float] | None:
    return cfg.goal if cfg.goal is not None else world.goal


def validate_config(cfg: ScenarioConfig) -> World:
    """Check a scenario as a whole and build its world.

    Returns:
        the scenario's world

    Raises:
        ConfigError: listing every problem found
    """

    problems = []
    world = None
    try:
        world = build_world(cfg)
    except VgNavError as err:
        problems.append(f"world: {err}")

    if not cfg.modes:
        problems.append("modes: at least one planner mode is required")
    if cfg.dt <= 0:
        problems.append("dt must be positive")
    if cfg.lattice_resolution <= 0:
        problems.append("lattice resolution must be positive")
    if cfg.lidar.max_range > cfg.planner.occupancy_radius:
        problems.append("lidar.max_range must not exceed planner.occupancy_radius")
    if cfg.planner.elevation_bounds[0] < cfg.lidar.elevation_min - 1e-9:
        problems.append("planner.elevation_bounds: the lower bound lies below the lowest LiDAR channel")
    if cfg.suite.trials < 1:
        problems.append("suite.trials must be at least 1")
    if cfg.suite.jobs < 1:
        problems.append("suite.jobs must be at least 1")
    term = cfg.termination
    if min(term.goal_tolerance, term.stuck_timeout, term.trial_timeout, term.progress_window) <= 0:
        problems.append("termination limits must be positive")
    if any(jitter < 0 for jitter in cfg.robot.spawn_jitter):
        problems.append("robot.spawn_jitter must be non-negative")

    if world is not None:
        missing = [name for name in world.class_names if name not in cfg.class_map.class_names]
        problems += [f"class_map: world class '{name}' is not mapped" for name in missing]
        spawn = resolve_spawn(cfg, world)
        goal = resolve_goal(cfg, world)
        if spawn is None:
            problems.append("robot.spawn: the world has no default spawn")
        elif not world.contains(spawn[0], spawn[1]):
            problems.append("robot.spawn: outside the world")
        if goal is None:
            problems.append("goal: the world has no default goal")
        elif not world.contains(goal[0], goal[1]):
            problems.append("goal: outside the world")

    if problems:
        raise ConfigError(problems)
    return world


def with_overrides(cfg: ScenarioConfig, modes=None, seed: int | None = None, trials: int | None = None, jobs: int | None = None) -> ScenarioConfig:
    """Apply command-line overrides to a scenario."""

    suite = cfg.suite
    if seed is not None:
        suite = replace(suite, base_seed=seed)
    if trials is not None:
        suite = replace(suite, trials=trials)
    if jobs is not None:
        suite = replace(suite, jobs=jobs)
    return replace(cfg, suite=suite, modes=tuple(modes) if modes else cfg.modes)
