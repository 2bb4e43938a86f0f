"""Command-line entry point: ``zvonkin run|validate <config>`` and ``zvonkin catalog``."""
from __future__ import annotations

import argparse
import sys

from . import catalog
from .coefficients import validate_problem
from .config import parse_config
from .errors import ConfigError, ZvonkinError

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="zvonkin", description="Scale-transform experiments for diagonal SDEs.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write CSV outputs")
    run.add_argument("config")
    val = sub.add_parser("validate", help="parse a config and validate its problem")
    val.add_argument("config")
    sub.add_parser("catalog", help="list built-in coefficient sets")
    return parser


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "catalog":
            for name in catalog.names():
                print(f"{name:20s} {catalog.describe(name)}")
            return EXIT_OK
        cfg = _load(args.config)
        if args.command == "validate":
            if cfg.catalog is not None:
                from .runner import problem_from_config

                report = validate_problem(problem_from_config(cfg))
                print(report)
                return EXIT_OK if report.ok else EXIT_DOMAIN
            print("ok")
            return EXIT_OK
        from .runner import run_scenario

        for path in run_scenario(cfg):
            print(path)
        return EXIT_OK
    except ConfigError as e:
        print(f"zvonkin: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ZvonkinError as e:
        print(f"zvonkin: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
