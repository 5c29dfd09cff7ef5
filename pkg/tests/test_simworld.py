import numpy as np
import pytest

from backend.errors import InvalidArgumentError, OutOfBoundsError
from backend.math import Pose
from backend.planner import Lnp, MotionCommand, PlannerConfig, motion_command
from backend.simworld import (
    LidarModel,
    RobotState,
    World,
    load_world,
    raycast,
    region_events,
    save_world,
    simulate_lidar,
    step_robot,
)
from backend.worlds import GENERATORS, flat, generate, grass_mud_hsg


def tilted_world() -> World:
    return World(heights=[[0.0, 0.0], [1.0, 1.0]], classes=[[0, 1], [1, 0]], cell_size=1.0, class_names=("grass", "mud"))


def test_bilinear_height_and_gradient():
    world = tilted_world()
    assert world.height_at(0.5, 0.5) == pytest.approx(0.5)
    assert world.height_at(0.3, 0.8) == pytest.approx(0.8)
    dx, dy = world.gradient_at(0.3, 0.8)
    assert (float(dx), float(dy)) == pytest.approx((0.0, 1.0))
    # outside the grid the edge value is used
    assert world.height_at(-5.0, 5.0) == pytest.approx(1.0)


def test_class_of_the_nearest_node():
    world = tilted_world()
    assert world.class_at(0.1, 0.2) == "grass"
    assert world.class_at(0.9, 0.2) == "mud"
    assert world.class_at(0.9, 0.9) == "grass"


def test_slope_angles():
    world = tilted_world()
    pitch, roll = world.slope_angles(0.5, 0.5, np.pi / 2)
    assert pitch == pytest.approx(np.pi / 4)
    assert roll == pytest.approx(0.0, abs=1e-12)
    pitch, roll = world.slope_angles(0.5, 0.5, 0.0)
    assert pitch == pytest.approx(0.0, abs=1e-12)
    assert roll == pytest.approx(np.pi / 4)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"heights": np.zeros((3, 3)), "classes": np.zeros((3, 4)), "cell_size": 1.0},
        {"heights": np.zeros((3, 3)), "classes": np.full((3, 3), 2), "cell_size": 1.0},
        {"heights": np.zeros((3, 3)), "classes": np.zeros((3, 3)), "cell_size": 0.0},
        {"heights": np.zeros((1, 3)), "classes": np.zeros((1, 3)), "cell_size": 1.0},
    ],
)
def test_world_validation(kwargs):
    with pytest.raises(InvalidArgumentError):
        World(**kwargs)


def test_raycast_straight_down():
    assert raycast(flat(), [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], 20.0) == pytest.approx(1.0, abs=1e-6)


def test_raycast_at_a_grazing_angle():
    angle = np.radians(-10.0)
    direction = [np.cos(angle), 0.0, np.sin(angle)]
    assert raycast(flat(), [0.0, 0.0, 1.0], direction, 20.0) == pytest.approx(1.0 / np.sin(np.radians(10.0)), abs=1e-3)


@pytest.mark.parametrize("direction", [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [np.cos(0.1), 0.0, -np.sin(0.1)]])
def test_raycast_misses(direction):
    # up, level, and down but beyond the range
    assert raycast(flat(), [0.0, 0.0, 1.0], direction, 5.0) is None


def test_raycast_hits_a_slope():
    world = grass_mud_hsg()
    # looking -y from the flat side of the ramp foot
    distance = raycast(world, [12.0, -5.0, 0.5], [0.0, -1.0, 0.0], 10.0)
    # the ramp rises 0.5 m at 0.5 / tan(30 deg) past its foot
    assert distance == pytest.approx(1.0 + 0.5 / np.tan(np.radians(30.0)), abs=1e-2)


def test_lidar_on_flat_ground():
    model = LidarModel()
    robot = RobotState(Pose((0.0, 0.0, 0.0)))
    points = simulate_lidar(flat(), robot, model, seed=0)
    # channels from -15 to -3 deg reach the ground within 20 m
    assert points.shape == (7 * 180, 3)
    np.testing.assert_allclose(points[:, 2], -model.mount_height, atol=1e-6)


def test_lidar_follows_the_robot_pose():
    model = LidarModel(channels=1, elevation_min=np.radians(-30.0))
    robot = RobotState(Pose((2.0, 3.0, 0.0), 1.0))
    points = simulate_lidar(flat(), robot, model, seed=0)
    # sensor-frame ranges do not depend on the pose over flat ground
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-6)


def test_lidar_noise():
    model = LidarModel(
        channels=8,
        elevation_min=np.radians(-15.0),
        elevation_max=np.radians(-5.0),
        azimuth_step=np.radians(0.25),
        noise_sigma=0.01,
    )
    robot = RobotState(Pose((0.0, 0.0, 0.0)))
    world = flat()
    first = simulate_lidar(world, robot, model, seed=[3, 0, 0])
    second = simulate_lidar(world, robot, model, seed=[3, 0, 0])
    np.testing.assert_array_equal(first, second)

    ranges = np.linalg.norm(first, axis=1)
    elevations = np.repeat(model.elevations, len(model.azimuths))
    truth = model.mount_height / np.sin(-elevations)
    assert 0.008 < np.std(ranges - truth) < 0.012

    other = simulate_lidar(world, robot, model, seed=[4, 0, 0])
    assert not np.array_equal(first, other)


def test_step_forward_and_turn():
    world = flat()
    state = RobotState(Pose((0.0, 0.0, 0.0)))
    moved = step_robot(state, MotionCommand(1.0, 0.0), 0.1, world)
    assert (moved.pose.x, moved.pose.y) == pytest.approx((0.1, 0.0))
    assert moved.linear_vel == 1.0

    turned = step_robot(state, MotionCommand(0.0, np.pi / 2), 1.0, world)
    assert (turned.pose.x, turned.pose.y) == (0.0, 0.0)
    assert turned.pose.heading == pytest.approx(np.pi / 2)

    # the heading turns before the robot advances
    both = step_robot(state, MotionCommand(1.0, np.pi / 2), 1.0, world)
    assert (both.pose.x, both.pose.y) == pytest.approx((0.0, 1.0), abs=1e-12)


def test_reverse_is_not_allowed():
    state = step_robot(RobotState(Pose((0.0, 0.0, 0.0))), MotionCommand(-1.0, 0.0), 0.1, flat())
    assert (state.pose.x, state.linear_vel) == (0.0, 0.0)


@pytest.mark.parametrize("heading", [-np.pi / 2, 0.0])
def test_robot_gets_stuck_on_the_ramp(heading):
    # facing up the ramp the pitch is too steep, across it the roll
    world = grass_mud_hsg()
    state = RobotState(Pose((15.0, -7.0, 0.0), heading))
    state = step_robot(state, MotionCommand(0.5, 0.0), 0.1, world)
    assert state.stuck
    assert state.pose.z > 0


def test_stuck_is_irreversible():
    world = grass_mud_hsg()
    state = step_robot(RobotState(Pose((15.0, -7.0, 0.0), -np.pi / 2)), MotionCommand(0.5, 0.0), 0.1, world)
    position = state.pose.position.copy()
    for _ in range(5):
        state = step_robot(state, MotionCommand(1.0, 0.4), 0.1, world)
        assert state.stuck
        assert state.linear_vel == 0.0
    np.testing.assert_array_equal(state.pose.position, position)
    assert state.pose.heading != pytest.approx(-np.pi / 2)


def test_flat_ground_never_sticks():
    state = RobotState(Pose((0.0, 0.0, 0.0)))
    for _ in range(20):
        state = step_robot(state, MotionCommand(1.0, 0.3), 0.1, flat())
    assert not state.stuck


def test_step_errors():
    world = flat()
    with pytest.raises(InvalidArgumentError):
        step_robot(RobotState(Pose((0.0, 0.0, 0.0))), MotionCommand(1.0, 0.0), 0.0, world)
    with pytest.raises(OutOfBoundsError):
        step_robot(RobotState(Pose((19.95, 0.0, 0.0))), MotionCommand(1.0, 0.0), 0.1, world)


def test_region_events():
    world = grass_mud_hsg()
    through_mud = [Pose((0.0, -8.0)), Pose((0.0, -12.0)), Pose((0.0, -16.0))]
    assert region_events(through_mud, world) == {"mud": True, "HSG": False}
    around = [Pose((-5.0, -8.0)), Pose((-5.0, -16.0))]
    assert region_events(around, world) == {"mud": False, "HSG": False}
    assert region_events([], world) == {"mud": False, "HSG": False}


def test_world_file(tmp_path):
    world = grass_mud_hsg(size=10.0, cell_size=0.5)
    path = tmp_path / "world.json"
    save_world(world, path)
    loaded = load_world(path)
    np.testing.assert_allclose(loaded.heights, world.heights, atol=1e-6)
    np.testing.assert_array_equal(loaded.classes, world.classes)
    assert loaded.class_names == world.class_names
    assert loaded.spawn == pytest.approx(world.spawn)
    np.testing.assert_allclose(loaded.regions["HSG"], world.regions["HSG"])


def test_bundled_worlds_have_spawn_and_goal_inside():
    for name in GENERATORS:
        world = generate(name)
        assert world.contains(*world.spawn[:2])
        assert world.contains(*world.goal)


def test_unknown_generator():
    with pytest.raises(InvalidArgumentError):
        generate("moon")
    with pytest.raises(InvalidArgumentError):
        generate("flat", slope_deg=10.0)


def test_planned_steps_never_exceed_the_speed_limit():
    rng = np.random.default_rng(31)
    cfg = PlannerConfig()
    world = flat()
    state = RobotState(Pose((0.0, 0.0, 0.0)))
    for _ in range(100):
        lnp = Lnp(float(rng.uniform(-np.pi, np.pi)), -0.1, float(rng.uniform(0.0, 40.0)), (0.0, 0.0, 0.0))
        after = step_robot(state, motion_command(lnp, cfg), 0.1, world)
        moved = np.hypot(after.pose.x - state.pose.x, after.pose.y - state.pose.y)
        assert moved <= cfg.v_max * 0.1 + 1e-12
        state = after
