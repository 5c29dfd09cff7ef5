from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from backend.errors import OutputError
from backend.harness import load_trajectory
from backend.simworld import World


def plot_trajectories(world: World, trajectories: dict[str, np.ndarray], goal, image_path: str | Path) -> None:
    """Render the class map, slopes, named regions and trajectories to an image.

    Args:
        world: world to draw
        trajectories: label -> (n, 2) positions
        goal: (x, y) goal position
        image_path: where to save the figure
    """

    # remove any dangling plots
    plt.close()

    x_min, x_max, y_min, y_max = world.bounds
    fig = plt.figure(figsize=(8, 8))
    ax = fig.add_subplot()
    ax.imshow(
        world.classes,
        origin="lower",
        extent=(x_min, x_max, y_min, y_max),
        cmap="tab10",
        vmin=0,
        vmax=9,
        alpha=0.5,
        interpolation="nearest",
    )
    if np.ptp(world.heights) > 0:
        ax.contour(
            np.linspace(x_min, x_max, world.shape[1]),
            np.linspace(y_min, y_max, world.shape[0]),
            world.heights,
            levels=8,
            colors="k",
            linewidths=0.5,
        )

    for name, polygon in world.regions.items():
        closed = np.vstack([polygon, polygon[:1]])
        ax.plot(closed[:, 0], closed[:, 1], "--", linewidth=1.0)
        ax.annotate(name, polygon.mean(axis=0), ha="center")

    for label, positions in trajectories.items():
        if len(positions):
            ax.plot(positions[:, 0], positions[:, 1], linewidth=1.2, label=label)

    if world.spawn is not None:
        ax.plot(world.spawn[0], world.spawn[1], "o", color="k")
    if goal is not None:
        ax.plot(goal[0], goal[1], "*", color="r", markersize=12)

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    if trajectories:
        ax.legend(loc="upper right", fontsize="small")

    try:
        fig.savefig(image_path, dpi=150, bbox_inches="tight")
    except OSError as err:
        raise OutputError(image_path, err.strerror or str(err)) from err
    finally:
        plt.close(fig)


def collect_trajectories(out_dir: str | Path) -> dict[str, np.ndarray]:
    """Trajectories of every trace file in `out_dir`, keyed by file stem."""

    return {path.stem: load_trajectory(path) for path in sorted(Path(out_dir).glob("trace_*.csv"))}
