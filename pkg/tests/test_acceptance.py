"""Scenario-scale runs: full suites, large reconstructions and the cycle-time budget.

Run with `pytest -m slow`.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from backend.config import load_config, with_overrides
from backend.enums import Outcome, PlannerMode
from backend.gp import OptimSettings, RqKernelParams, fit_svgp
from backend.harness import run_suite, run_trial
from backend.math import Pose
from backend.simworld import LidarModel, RobotState, simulate_lidar
from backend.surfaces import build_occupancy_surface, reconstruct_cloud
from backend.worlds import grass_mud_hsg

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_reconstruction_error_on_a_lidar_scan():
    world = grass_mud_hsg()
    x, y, heading = world.spawn
    robot = RobotState(Pose((x, y, float(world.height_at(x, y))), heading))
    scan = simulate_lidar(world, robot, LidarModel(noise_sigma=0.01), seed=[0, 0, 0])
    surface = build_occupancy_surface(scan, 20.0)
    model = fit_svgp(
        surface.training_set(0.05),
        RqKernelParams(20.0, 0.1, 1.0),
        400,
        OptimSettings(max_iterations=50, inducing_init="subset"),
        wrap_azimuth=True,
    )
    radius = np.linalg.norm(reconstruct_cloud(model, surface), axis=1)
    assert np.mean(np.abs(radius - surface.radius)) <= 0.15


@pytest.fixture(scope="module")
def hsg_report():
    cfg = load_config(CONFIGS / "grass_mud_hsg.json")
    return run_suite(with_overrides(cfg, trials=15, jobs=4))


def test_geometry_only_drives_through_mud(hsg_report):
    trials = hsg_report.trials["g"]
    assert sum(t.regions["mud"] for t in trials) >= 14
    assert not any(t.regions["HSG"] for t in trials)
    assert hsg_report.modes["g"].avoidance["HSG"] == 100.0


def test_vision_only_gets_stuck_on_the_slope(hsg_report):
    assert all(t.outcome is Outcome.STUCK for t in hsg_report.trials["v"])
    assert hsg_report.modes["v"].avoidance["HSG"] == 0.0


def test_visual_geometry_avoids_both(hsg_report):
    clean = [
        t
        for t in hsg_report.trials["vg"]
        if t.outcome is Outcome.REACHED and not t.regions["mud"] and not t.regions["HSG"]
    ]
    assert len(clean) >= 14


def test_flat_spawn_ordering():
    cfg = load_config(CONFIGS / "grass_mud_flat_spawn.json")
    report = run_suite(with_overrides(cfg, modes=[PlannerMode.V, PlannerMode.VG], trials=15, jobs=4))
    v, vg = report.modes["v"], report.modes["vg"]
    assert vg.path_length_mean < v.path_length_mean
    assert vg.max_velocity_mean > v.max_velocity_mean


@pytest.fixture(scope="module")
def corner_runs():
    cfg = load_config(CONFIGS / "grass_corner_table.json")
    return {
        mode: [run_trial(cfg, mode, seed) for seed in range(cfg.suite.trials)] for mode in (PlannerMode.V, PlannerMode.VG)
    }


def test_vision_only_is_trapped_in_the_corner(corner_runs):
    for summary, traces in corner_runs[PlannerMode.V]:
        # no progress over the window, not a physical stall
        assert summary.outcome is Outcome.STUCK
        assert not any(trace.stuck for trace in traces)
        goal = np.array([6.0, -6.0])
        assert np.hypot(*(goal - traces[-1].pose.position[:2])) > 0.5


def test_visual_geometry_escapes_the_corner(corner_runs):
    for summary, traces in corner_runs[PlannerMode.VG]:
        assert summary.outcome is Outcome.REACHED
        assert any(trace.outside_fov > 0 for trace in traces)


@pytest.mark.parametrize("mode", [PlannerMode.G, PlannerMode.VG])
def test_cycle_time_budget(mode):
    cfg = load_config(CONFIGS / "grass_mud_hsg.json")
    _, traces = run_trial(cfg, mode, 0)
    totals = [trace.timings["total"] for trace in traces]
    assert len(totals) >= 100
    assert np.mean(totals) <= 250.0


def test_cycle_time_budget_in_the_corner(corner_runs):
    totals = [trace.timings["total"] for _, traces in corner_runs[PlannerMode.VG] for trace in traces]
    assert np.mean(totals) <= 250.0


def test_suites_are_reproducible(tmp_path):
    cfg = replace(load_config(CONFIGS / "flat.json"), name="repeat")
    cfg = with_overrides(cfg, trials=2)
    run_suite(cfg, tmp_path / "first")
    run_suite(with_overrides(cfg, jobs=2), tmp_path / "second")
    first = sorted((tmp_path / "first").glob("trace_*.csv"))
    assert len(first) == 6
    for path in first:
        assert path.read_bytes() == (tmp_path / "second" / path.name).read_bytes()
