import logging
import sys

from backend.errors import VgNavError
from backend.parser import create_parser
from cli.vgnav_cli import VgNavCLI


def main():
    parser = create_parser("vgnav")
    args = parser.parse_args()

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        code = VgNavCLI(args).execute()
    except VgNavError as err:
        logging.getLogger("vgnav").error("%s", err)
        code = 1

    sys.exit(code)


if __name__ == "__main__":
    main()
