"""Trial and suite runner with trace and summary output."""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from backend.config import ScenarioConfig, resolve_goal, resolve_spawn, validate_config
from backend.enums import Navigability, Outcome, PlannerMode
from backend.errors import OutOfBoundsError, OutputError
from backend.math import Pose
from backend.navigator import SPAWN_STREAM, STAGES, Navigator
from backend.simworld import RobotState, World, region_events, step_robot

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "cycle",
    "time",
    "x",
    "y",
    "z",
    "heading",
    "lnps",
    "navigable",
    "non_navigable",
    "outside_fov",
    "selected",
    "azimuth",
    "elevation",
    "range",
    "cost",
    "linear",
    "angular",
    "stuck",
)
TIMING_COLUMNS = ("cycle", *STAGES, "total")


@dataclass(frozen=True)
class CycleTrace:
    """One planning cycle: the pose it started from, what was planned and how long it took (ms)."""

    cycle: int
    time: float
    pose: Pose
    lnp_count: int
    navigable: int
    non_navigable: int
    outside_fov: int
    selected: bool
    azimuth: float
    elevation: float
    range: float
    cost: float
    linear: float
    angular: float
    stuck: bool
    timings: dict[str, float]

    def row(self) -> list[str]:
        def real(value: float) -> str:
            return f"{value:.6f}"

        return [
            str(self.cycle),
            real(self.time),
            real(self.pose.x),
            real(self.pose.y),
            real(self.pose.z),
            real(self.pose.heading),
            str(self.lnp_count),
            str(self.navigable),
            str(self.non_navigable),
            str(self.outside_fov),
            str(int(self.selected)),
            real(self.azimuth),
            real(self.elevation),
            real(self.range),
            real(self.cost),
            real(self.linear),
            real(self.angular),
            str(int(self.stuck)),
        ]


@dataclass(frozen=True)
class TrialSummary:
    """Outcome and metrics of one trial."""

    mode: str
    seed: int
    outcome: Outcome
    path_length: float
    max_velocity: float
    regions: dict[str, bool]
    mean_cycle_ms: float
    cycles: int
    duration: float

    def to_dict(self) -> dict:
        return asdict(self) | {"outcome": str(self.outcome)}


def path_length(trajectory: list[Pose]) -> float:
    return float(sum(a.distance_to(b) for a, b in zip(trajectory, trajectory[1:])))


def _spawn_pose(cfg: ScenarioConfig, world: World, seed: int) -> Pose:
    x, y, heading = resolve_spawn(cfg, world)
    distance, angle = cfg.robot.spawn_jitter
    if distance > 0 or angle > 0:
        rng = np.random.default_rng([seed, 0, SPAWN_STREAM])
        dx, dy = rng.uniform(-distance, distance, 2)
        heading += rng.uniform(-angle, angle)
        x, y = x + dx, y + dy
    return Pose((x, y, float(world.height_at(x, y))), heading)


def run_trial(
    cfg: ScenarioConfig, mode: PlannerMode, seed: int, world: World | None = None
) -> tuple[TrialSummary, list[CycleTrace]]:
    """Run one closed-loop trial until the goal is reached or a failure rule fires.

    Args:
        cfg: scenario
        mode: planner mode
        seed: trial seed; every random draw derives from it
        world: prebuilt world; built and validated from `cfg` when None

    Returns:
        (trial summary, per-cycle traces)

    Raises:
        ConfigError: if the scenario is invalid, before any simulation step
    """

    if world is None:
        world = validate_config(cfg)
    term = cfg.termination
    goal = np.asarray(resolve_goal(cfg, world), dtype=float)
    state = RobotState(_spawn_pose(cfg, world, seed))
    planner = replace(
        cfg.planner,
        goal_distance=float(np.hypot(*(goal - state.pose.position[:2]))),
        sensor_height=cfg.lidar.mount_height,
    )
    navigator = Navigator(cfg, world, mode, goal, seed, planner)
    logger.info("trial %s seed %d: start at (%.2f, %.2f)", mode.key, seed, state.pose.x, state.pose.y)

    trajectory = [state.pose]
    traces: list[CycleTrace] = []
    max_velocity = 0.0
    stuck_since = None
    window = int(round(term.progress_window / cfg.dt))
    max_cycles = int(round(term.trial_timeout / cfg.dt))
    outcome = Outcome.TIMEOUT

    for cycle in range(max_cycles):
        t = cycle * cfg.dt
        if np.hypot(*(goal - state.pose.position[:2])) <= term.goal_tolerance:
            outcome = Outcome.REACHED
            break
        if state.stuck:
            stuck_since = t if stuck_since is None else stuck_since
            if t - stuck_since >= term.stuck_timeout:
                outcome = Outcome.STUCK
                break
        if cycle >= window and trajectory[-1].distance_to(trajectory[-1 - window]) < term.progress_distance:
            outcome = Outcome.STUCK
            break

        result = navigator.step(state)
        selected = result.selected
        traces.append(
            CycleTrace(
                cycle=cycle,
                time=t,
                pose=state.pose,
                lnp_count=len(result.lnps),
                navigable=result.count(Navigability.NAVIGABLE),
                non_navigable=result.count(Navigability.NON_NAVIGABLE),
                outside_fov=result.count(Navigability.OUTSIDE_FOV),
                selected=selected is not None,
                azimuth=selected.azimuth if selected else 0.0,
                elevation=selected.elevation if selected else 0.0,
                range=selected.range if selected else 0.0,
                cost=selected.cost if selected else 1.0,
                linear=result.command.linear,
                angular=result.command.angular,
                stuck=state.stuck,
                timings=result.timings,
            )
        )
        try:
            state = step_robot(state, result.command, cfg.dt, world, term.climb_limit)
        except OutOfBoundsError as err:
            logger.info("trial %s seed %d: %s", mode.key, seed, err)
            outcome = Outcome.OUT_OF_BOUNDS
            break
        trajectory.append(state.pose)
        max_velocity = max(max_velocity, abs(state.linear_vel))

    summary = TrialSummary(
        mode=mode.key,
        seed=seed,
        outcome=outcome,
        path_length=path_length(trajectory),
        max_velocity=max_velocity,
        regions=region_events(trajectory, world),
        mean_cycle_ms=float(np.mean([trace.timings["total"] for trace in traces])) if traces else 0.0,
        cycles=len(traces),
        duration=len(traces) * cfg.dt,
    )
    logger.info(
        "trial %s seed %d: %s after %.1f s, path %.2f m", mode.key, seed, outcome, summary.duration, summary.path_length
    )
    return summary, traces


@dataclass(frozen=True)
class ModeReport:
    """Aggregate metrics of the trials of one mode; avoidance is a percentage of trials."""

    mode: str
    trials: int
    success_rate: float
    outcomes: dict[str, int]
    path_length_mean: float
    path_length_std: float
    max_velocity_mean: float
    max_velocity_std: float
    avoidance: dict[str, float]
    mean_cycle_ms: float


def aggregate(mode: str, summaries: list[TrialSummary]) -> ModeReport:
    """Mean and population standard deviation (a single trial has std 0)."""

    lengths = np.array([s.path_length for s in summaries])
    velocities = np.array([s.max_velocity for s in summaries])
    regions = sorted({name for s in summaries for name in s.regions})
    return ModeReport(
        mode=mode,
        trials=len(summaries),
        success_rate=100.0 * sum(s.outcome is Outcome.REACHED for s in summaries) / len(summaries),
        outcomes={str(o): sum(s.outcome is o for s in summaries) for o in Outcome},
        path_length_mean=float(lengths.mean()),
        path_length_std=float(lengths.std()),
        max_velocity_mean=float(velocities.mean()),
        max_velocity_std=float(velocities.std()),
        avoidance={
            name: 100.0 * sum(not s.regions.get(name, False) for s in summaries) / len(summaries) for name in regions
        },
        mean_cycle_ms=float(np.mean([s.mean_cycle_ms for s in summaries])),
    )


@dataclass(frozen=True)
class SuiteReport:
    scenario: str
    modes: dict[str, ModeReport]
    trials: dict[str, list[TrialSummary]]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "modes": {key: asdict(report) for key, report in self.modes.items()},
            "trials": {key: [s.to_dict() for s in summaries] for key, summaries in self.trials.items()},
        }


def _run_job(job: tuple[ScenarioConfig, PlannerMode, int, str | None]) -> TrialSummary:
    cfg, mode, seed, out_dir = job
    summary, traces = run_trial(cfg, mode, seed)
    if out_dir is not None:
        write_trial_outputs(Path(out_dir), mode, seed, traces)
    return summary


def run_suite(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> SuiteReport:
    """Run `cfg.suite.trials` seeded trials per mode and aggregate them.

    Trials use seeds base_seed, base_seed + 1, ...; with more than one job they run
    in a process pool, and results are ordered by seed either way.
    """

    validate_config(cfg)
    seeds = [cfg.suite.base_seed + i for i in range(cfg.suite.trials)]
    jobs = [(cfg, mode, seed, str(out_dir) if out_dir is not None else None) for mode in cfg.modes for seed in seeds]
    logger.info("suite '%s': %d trials over %d modes", cfg.name, len(jobs), len(cfg.modes))

    if cfg.suite.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.suite.jobs) as executor:
            summaries = list(executor.map(_run_job, jobs))
    else:
        summaries = [_run_job(job) for job in jobs]

    trials: dict[str, list[TrialSummary]] = {mode.key: [] for mode in cfg.modes}
    for summary in summaries:
        trials[summary.mode].append(summary)
    report = SuiteReport(cfg.name, {key: aggregate(key, runs) for key, runs in trials.items()}, trials)
    if out_dir is not None:
        write_summary(report, Path(out_dir) / "summary.json")
    return report


def _open_for_writing(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err


def emit_traces(traces: list[CycleTrace], path: str | Path) -> None:
    """Write one CSV row per cycle under a fixed header; the file is a pure function of the trial."""

    path = Path(path)
    with _open_for_writing(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace.row() for trace in traces)


def emit_timings(traces: list[CycleTrace], path: str | Path) -> None:
    """Write the per-cycle stage timings (ms), which vary from run to run."""

    path = Path(path)
    with _open_for_writing(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TIMING_COLUMNS)
        for trace in traces:
            writer.writerow([trace.cycle, *(f"{trace.timings[name]:.3f}" for name in TIMING_COLUMNS[1:])])


def write_trial_outputs(out_dir: Path, mode: PlannerMode, seed: int, traces: list[CycleTrace]) -> None:
    emit_traces(traces, out_dir / f"trace_{mode.key}_{seed}.csv")
    emit_timings(traces, out_dir / f"timing_{mode.key}_{seed}.csv")


def write_summary(report, path: str | Path) -> None:
    """Write a suite report or a trial summary as JSON."""

    path = Path(path)
    with _open_for_writing(path) as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info("wrote %s", path)


def load_trajectory(path: str | Path) -> np.ndarray:
    """(n, 2) planar positions read back from a trace file."""

    try:
        with Path(path).open(newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err
    return np.array([[float(row["x"]), float(row["y"])] for row in rows]).reshape(-1, 2)
