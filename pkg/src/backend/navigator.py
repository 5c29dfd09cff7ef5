"""The per-cycle sense, surface, fit, plan pipeline of one robot."""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from backend.enums import Navigability, PlannerMode
from backend.errors import DegenerateDataError
from backend.gp import SgpModel, TrainingSet, fit_svgp
from backend.planner import (
    Lnp,
    MotionCommand,
    assess_navigability,
    extract_g_lnps,
    extract_v_lnps,
    motion_command,
    recovery_command,
    select_lnp,
)
from backend.simworld import RobotState, World, simulate_lidar
from backend.surfaces import (
    AngularLattice,
    build_occupancy_surface,
    build_visual_surface,
    predict_lattice,
    split_visual_datasets,
    variance_surface,
)
from backend.vision import camera_pose, navigability_image, project_navigability, segment_oracle

logger = logging.getLogger(__name__)

# seed-sequence stream identifiers
LIDAR_STREAM = 0
CAMERA_STREAM = 1
SPAWN_STREAM = 2

STAGES = ("fit_g", "predict_g", "fit_v", "predict_v")


class Stopwatch:
    """Accumulates monotonic wall time per named stage."""

    def __init__(self) -> None:
        self._elapsed: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self._elapsed[name] = self._elapsed.get(name, 0.0) + time.perf_counter() - start

    def ms(self, name: str) -> float:
        return 1000.0 * self._elapsed.get(name, 0.0)


@dataclass(frozen=True)
class CycleResult:
    """What one planning cycle decided, with its stage timings in milliseconds."""

    lnps: tuple[Lnp, ...]
    selected: Lnp | None
    command: MotionCommand
    recovering: bool
    timings: dict[str, float]

    def count(self, navigability: Navigability | None) -> int:
        return sum(1 for lnp in self.lnps if lnp.navigability == navigability)


class Navigator:
    """Runs the planning pipeline of one mode, warm-starting hyperparameters across cycles.

    G mode uses only the LiDAR, V mode only the camera; VG uses both.
    """

    def __init__(self, cfg, world: World, mode: PlannerMode, goal, seed: int, planner=None) -> None:
        self._cfg = cfg
        self._world = world
        self._mode = mode
        self._goal = np.asarray(goal, dtype=float)
        self._seed = seed
        self._planner = planner or cfg.planner
        self._cycle = 0
        self._warm: dict[str, tuple] = {}
        fov = cfg.camera.fov
        self._full_lattice = AngularLattice.regular(
            self._planner.elevation_bounds[0], self._planner.elevation_bounds[1], cfg.lattice_resolution
        )
        self._fov_lattice = AngularLattice.regular(
            fov.elevation_min, fov.elevation_max, cfg.lattice_resolution, fov.azimuth_min, fov.azimuth_max
        )

    @property
    def mode(self) -> PlannerMode:
        return self._mode

    @property
    def cycle(self) -> int:
        return self._cycle

    def _fit(self, name: str, train: TrainingSet | None, settings, wrap_azimuth: bool) -> SgpModel | None:
        if train is None:
            return None
        kernel, noise = self._warm.get(name, (settings.kernel, settings.noise_variance))
        train = TrainingSet(train.inputs, train.targets, noise)
        try:
            model = fit_svgp(
                train,
                kernel,
                min(settings.num_inducing, len(train)),
                settings.optim(name not in self._warm),
                wrap_azimuth=wrap_azimuth,
            )
        except DegenerateDataError as err:
            logger.debug("cycle %d: skipping %s model: %s", self._cycle, name, err)
            return None
        self._warm[name] = (model.kernel, model.noise_variance)
        return model

    def _geometric_lnps(self, state: RobotState, watch: Stopwatch) -> list[Lnp]:
        cfg = self._cfg
        with watch.stage("sense"):
            scan = simulate_lidar(self._world, state, cfg.lidar, [self._seed, self._cycle, LIDAR_STREAM])
        with watch.stage("fit_g"):
            surface = build_occupancy_surface(scan, self._planner.occupancy_radius)
            train = surface.training_set(cfg.sgp.occupancy.noise_variance, cfg.sgp.occupancy.max_training_points)
            model = self._fit("occupancy", train, cfg.sgp.occupancy, wrap_azimuth=True)
        with watch.stage("predict_g"):
            if model is None:
                return self._open_lnps(state)
            return extract_g_lnps(variance_surface(model, self._full_lattice), model, self._planner, state.pose)

    def _open_lnps(self, state: RobotState) -> list[Lnp]:
        """Every direction free at the lowest admissible elevation, when the scan is empty."""

        lattice = self._full_lattice
        low, _ = self._planner.elevation_bounds
        elevation = lattice.elevations[lattice.elevations > low][0]
        radius = self._planner.occupancy_radius
        cos_el = np.cos(elevation)
        local = np.column_stack(
            [
                radius * cos_el * np.cos(lattice.azimuths),
                radius * cos_el * np.sin(lattice.azimuths),
                np.full(len(lattice.azimuths), radius * np.sin(elevation) + self._planner.sensor_height),
            ]
        )
        world = state.pose.to_world(local)
        return [
            Lnp(float(a), float(elevation), radius, tuple(float(c) for c in xyz))
            for a, xyz in zip(lattice.azimuths, world)
        ]

    def _visual_models(self, state: RobotState, watch: Stopwatch, with_depth: bool):
        cfg = self._cfg
        with watch.stage("sense"):
            pose = camera_pose(state.pose, cfg.camera, cfg.lidar.mount_height)
            frame = segment_oracle(self._world, pose, cfg.camera, [self._seed, self._cycle, CAMERA_STREAM])
        with watch.stage("fit_v"):
            image = navigability_image(frame.classes, frame.class_names, cfg.class_map)
            cloud = project_navigability(image, frame.depth, cfg.camera)
            surface = build_visual_surface(cloud, self._planner.visual_radius, cfg.camera.fov)
            nav_set, depth_set = split_visual_datasets(
                surface,
                self._planner.depth_cutoff,
                cfg.sgp.navigability.noise_variance,
                cfg.sgp.depth.noise_variance,
                cfg.sgp.navigability.max_training_points,
            )
            nav_model = self._fit("navigability", nav_set, cfg.sgp.navigability, wrap_azimuth=False)
            depth_model = self._fit("depth", depth_set, cfg.sgp.depth, wrap_azimuth=False) if with_depth else None
        return nav_model, depth_model

    def step(self, state: RobotState) -> CycleResult:
        """Plan one cycle from the robot's current state."""

        watch = Stopwatch()
        start = time.perf_counter()
        planner = self._planner
        fov = self._cfg.camera.fov

        match self._mode:
            case PlannerMode.G:
                lnps = self._geometric_lnps(state, watch)
            case PlannerMode.V:
                nav_model, depth_model = self._visual_models(state, watch, with_depth=True)
                with watch.stage("predict_v"):
                    if depth_model is None:
                        lnps = []
                    else:
                        depth = predict_lattice(depth_model, self._fov_lattice)
                        lnps = extract_v_lnps(depth, depth_model, planner, state.pose)
                        lnps = assess_navigability(lnps, nav_model, depth_model, fov, planner)
            case PlannerMode.VG:
                g_lnps = self._geometric_lnps(state, watch)
                nav_model, _ = self._visual_models(state, watch, with_depth=False)
                with watch.stage("predict_v"):
                    lnps = assess_navigability(g_lnps, nav_model, None, fov, planner)

        selected = select_lnp(lnps, self._goal, self._mode, planner)
        recovering = False
        if selected is not None:
            command = motion_command(selected, planner)
        elif planner.recovery_enabled(self._mode):
            logger.warning("cycle %d: no viable LNP, rotating in place", self._cycle)
            command = recovery_command(planner)
            recovering = True
        else:
            logger.warning("cycle %d: no viable LNP in %s mode", self._cycle, self._mode.key)
            command = MotionCommand(0.0, 0.0)

        total = 1000.0 * (time.perf_counter() - start) - watch.ms("sense")
        timings = {name: watch.ms(name) for name in STAGES} | {"total": total}
        self._cycle += 1
        return CycleResult(tuple(lnps), selected, command, recovering, timings)
