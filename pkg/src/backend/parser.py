import argparse

from backend.enums import PlannerMode


def create_parser(prog: str):
    """Create command line argument parser.

    Args:
        prog: program name

    Returns:
        parser
    """

    parser = argparse.ArgumentParser(prog, description="Visual-geometry sparse GP local navigation")

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    commands = parser.add_subparsers(dest="command", required=True)

    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument("-c", "--config", required=True, help="scenario document (JSON)")
    scenario.add_argument("-o", "--out-dir", default="results", help="directory for traces and summaries")

    run = commands.add_parser("run", parents=[scenario], help="run a single trial")
    run.add_argument(
        "-m", "--mode", choices=[mode.key for mode in PlannerMode], required=True, help="planner mode"
    )
    run.add_argument("-s", "--seed", type=int, default=None, help="trial seed (default: the suite's base seed)")

    suite = commands.add_parser("suite", parents=[scenario], help="run seeded trials per mode and aggregate")
    suite.add_argument(
        "-m",
        "--mode",
        choices=[mode.key for mode in PlannerMode],
        action="append",
        help="planner mode; repeat for several (default: the scenario's modes)",
    )
    suite.add_argument("-s", "--seed", type=int, default=None, help="base seed")
    suite.add_argument("-n", "--trials", type=int, default=None, help="trials per mode")
    suite.add_argument("-j", "--jobs", type=int, default=None, help="worker processes")

    worldgen = commands.add_parser("worldgen", help="write bundled worlds to world files")
    worldgen.add_argument("names", nargs="*", help="generators to write (default: all)")
    worldgen.add_argument("-o", "--out-dir", default="worlds", help="output directory")

    validate = commands.add_parser("validate", help="check scenario documents")
    validate.add_argument("configs", nargs="+", help="scenario documents")

    plot = commands.add_parser("plot", help="render the world and the trajectories of an output directory")
    plot.add_argument("-c", "--config", required=True, help="scenario document (JSON)")
    plot.add_argument("-o", "--out-dir", default="results", help="directory holding the trace files")
    plot.add_argument("-f", "--file", default=None, help="image path (default: <out-dir>/trajectories.png)")

    return parser
