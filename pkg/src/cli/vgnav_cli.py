import argparse
import logging
from pathlib import Path

from backend.config import build_world, load_config, resolve_goal, validate_config, with_overrides
from backend.enums import PlannerMode
from backend.errors import ConfigError
from backend.harness import run_suite, run_trial, write_summary, write_trial_outputs
from backend.simworld import save_world
from backend.worlds import GENERATORS, generate
from cli.plots import collect_trajectories, plot_trajectories

logger = logging.getLogger(__name__)


class VgNavCLI:
    """Command line front end of the navigation harness."""

    def __init__(self, args: argparse.Namespace):
        """Bind parsed arguments to their command.

        Args:
            args: arguments from `create_parser`
        """

        self._command_callbacks = {
            "run": self._run,
            "suite": self._suite,
            "worldgen": self._worldgen,
            "validate": self._validate,
            "plot": self._plot,
        }
        self._args = args

    def execute(self) -> int:
        """Run the selected command and return its exit code."""

        return self._command_callbacks[self._args.command]()

    def _run(self) -> int:
        args = self._args
        cfg = load_config(args.config)
        seed = cfg.suite.base_seed if args.seed is None else args.seed
        mode = PlannerMode.from_key(args.mode)
        summary, traces = run_trial(cfg, mode, seed)
        out_dir = Path(args.out_dir)
        write_trial_outputs(out_dir, mode, seed, traces)
        write_summary(summary, out_dir / "summary.json")
        print(
            f"{mode.key}: {summary.outcome}, path {summary.path_length:.2f} m, "
            f"max velocity {summary.max_velocity:.2f} m/s, regions {summary.regions}"
        )
        return 0

    def _suite(self) -> int:
        args = self._args
        modes = [PlannerMode.from_key(key) for key in args.mode] if args.mode else None
        cfg = with_overrides(load_config(args.config), modes, args.seed, args.trials, args.jobs)
        report = run_suite(cfg, args.out_dir)

        print(f"{'mode':<5} {'success':>8} {'path [m]':>16} {'v_max [m/s]':>14}  avoidance")
        for key, mode_report in report.modes.items():
            avoidance = ", ".join(f"{name} {value:.0f}%" for name, value in mode_report.avoidance.items())
            print(
                f"{key:<5} {mode_report.success_rate:>7.0f}% "
                f"{mode_report.path_length_mean:>8.2f} ± {mode_report.path_length_std:<5.2f} "
                f"{mode_report.max_velocity_mean:>6.2f} ± {mode_report.max_velocity_std:<5.2f}  {avoidance}"
            )
        return 0

    def _worldgen(self) -> int:
        args = self._args
        names = args.names or list(GENERATORS)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in names:
            save_world(generate(name), out_dir / f"{name}.json")
        return 0

    def _validate(self) -> int:
        failed = 0
        for path in self._args.configs:
            try:
                validate_config(load_config(path))
            except ConfigError as err:
                failed += 1
                for problem in err.problems:
                    print(f"{path}: {problem}")
            else:
                print(f"{path}: ok")
        return 1 if failed else 0

    def _plot(self) -> int:
        args = self._args
        cfg = load_config(args.config)
        world = build_world(cfg)
        image_path = args.file or Path(args.out_dir) / "trajectories.png"
        plot_trajectories(world, collect_trajectories(args.out_dir), resolve_goal(cfg, world), image_path)
        logger.info("wrote %s", image_path)
        return 0
