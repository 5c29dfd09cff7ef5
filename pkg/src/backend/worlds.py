"""Bundled world generators."""

import numpy as np

from backend.errors import InvalidArgumentError
from backend.simworld import World


def _node_grid(size: float, cell_size: float) -> tuple[np.ndarray, np.ndarray, tuple[float, float]]:
    if size <= 0 or cell_size <= 0:
        raise InvalidArgumentError("world size and cell size must be positive")
    count = int(round(size / cell_size)) + 1
    origin = (-size / 2, -size / 2)
    coords = origin[0] + np.arange(count) * cell_size
    x, y = np.meshgrid(coords, coords)
    return x, y, origin


def _rectangle(x_min: float, x_max: float, y_min: float, y_max: float) -> list[list[float]]:
    return [[x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max]]


def flat(size: float = 40.0, cell_size: float = 0.25, goal_distance: float = 5.0) -> World:
    """Empty flat grass world; the robot starts at the origin facing +x."""

    x, _, origin = _node_grid(size, cell_size)
    return World(
        heights=np.zeros(x.shape),
        classes=np.zeros(x.shape, dtype=np.int32),
        cell_size=cell_size,
        origin=origin,
        class_names=("grass",),
        spawn=(0.0, 0.0, 0.0),
        goal=(goal_distance, 0.0),
    )


def grass_mud_hsg(size: float = 50.0, cell_size: float = 0.25, slope_deg: float = 30.0) -> World:
    """Grass field with a high-slope grass (HSG) block facing the spawn and a mud band
    across the path that skirts the block.

    The block covers x in [7, 20], y in [-16, -6]: a ramp rising towards -y over 5 m,
    then a plateau. The mud band covers x in [-3, 7), y in [-14, -10] and abuts the
    block, so the only mud-free way to the goal passes west of it.
    """

    x, y, origin = _node_grid(size, cell_size)
    grade = np.tan(np.radians(slope_deg))
    block = (x >= 7.0) & (x <= 20.0) & (y >= -16.0) & (y <= -6.0)
    heights = np.where(block, np.clip((-6.0 - y) * grade, 0.0, 5.0 * grade), 0.0)

    classes = np.zeros(x.shape, dtype=np.int32)
    classes[(x >= -3.0) & (x < 7.0) & (y >= -14.0) & (y <= -10.0)] = 1
    classes[y <= -22.0] = 2

    return World(
        heights=heights,
        classes=classes,
        cell_size=cell_size,
        origin=origin,
        class_names=("grass", "mud", "asphalt"),
        regions={"mud": _rectangle(-3.0, 7.0, -14.0, -10.0), "HSG": _rectangle(7.0, 20.0, -16.0, -6.0)},
        spawn=(15.0, -4.0, -np.pi / 2),
        goal=(-4.0, -16.0),
    )


def grass_mud_flat_spawn(size: float = 50.0, cell_size: float = 0.25, slope_deg: float = 30.0) -> World:
    """`grass_mud_hsg` with the spawn moved onto flat ground west of the HSG block."""

    world = grass_mud_hsg(size, cell_size, slope_deg)
    return World(
        heights=world.heights,
        classes=world.classes,
        cell_size=world.cell_size,
        origin=world.origin,
        class_names=world.class_names,
        regions=world.regions,
        spawn=(2.0, 0.0, -np.pi / 2),
        goal=world.goal,
    )


def grass_corner_table(size: float = 20.0, cell_size: float = 0.1, table_height: float = 0.8) -> World:
    """Asphalt yard with a corner formed by a grass patch ahead-left of the robot and a
    table ahead-right of it; the robot starts at the origin facing +x.
    """

    x, y, origin = _node_grid(size, cell_size)
    table = (x >= 0.5) & (x <= 3.5) & (y >= -3.0) & (y <= -1.2)
    heights = np.where(table, table_height, 0.0)

    classes = np.zeros(x.shape, dtype=np.int32)
    classes[(x >= 1.0) & (x <= 8.0) & (y >= -1.2) & (y <= 8.0)] = 1
    classes[table] = 2

    return World(
        heights=heights,
        classes=classes,
        cell_size=cell_size,
        origin=origin,
        class_names=("asphalt", "grass", "table"),
        regions={"grass": _rectangle(1.0, 8.0, -1.2, 8.0), "table": _rectangle(0.5, 3.5, -3.0, -1.2)},
        spawn=(0.0, 0.0, 0.0),
        goal=(6.0, -6.0),
    )


GENERATORS = {
    "flat": flat,
    "grass_mud_hsg": grass_mud_hsg,
    "grass_mud_flat_spawn": grass_mud_flat_spawn,
    "grass_corner_table": grass_corner_table,
}


def generate(name: str, **params) -> World:
    """Build a bundled world by name."""

    try:
        generator = GENERATORS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown world generator '{name}', choose from {sorted(GENERATORS)}") from None
    try:
        return generator(**params)
    except TypeError as err:
        raise InvalidArgumentError(f"bad parameters for world '{name}': {err}") from err
