"""Command-line front end.

    nonauto-equiv --config run.toml [--task NAME] [--out DIR] [--tol TOL]
                  [--unsafe-skip-smallness] [--seed N] [-v | -q]

The exit code is a function of the report status only: 0 for ``pass``, 1 for
``fail`` and ``outside-theorem``, 2 for usage and parse errors and 3 for
numerical failures.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from . import __version__
from .exceptions import ConfigError, ReportIOError
from .parsers.config import TASK_NAMES, load_config
from .renderers.report import EXIT_CODES, write_report
from .tasks import execute

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonauto-equiv",
        description="Construct and certify the equivalence maps of a perturbed linear system.",
    )
    parser.add_argument("--config", required=True, help="Run configuration (TOML)")
    parser.add_argument("--task", choices=TASK_NAMES, help="Override [task] name")
    parser.add_argument("--out", help="Override [output] directory")
    parser.add_argument("--tol", type=float, help="Conjugacy and inverse tolerance")
    parser.add_argument(
        "--unsafe-skip-smallness",
        action="store_true",
        help="Run even when K*gamma >= alpha (results are marked outside the theorem)",
    )
    parser.add_argument("--seed", type=int, help="Seed for sampled points and grids")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("-q", "--quiet", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("nonauto_equiv").setLevel(level)


def _describe(error: dict[str, Any]) -> str:
    text = f"{error['type']}: {error['message']}"
    if error.get("context"):
        details = ", ".join(f"{k}={v!r}" for k, v in error["context"].items())
        text += f" (context: {details})"
    return text


def run(argv: Sequence[str] | None = None) -> int:
    """Run one task and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CODES["usage-error"]
    _configure_logging(args.verbose, args.quiet)

    try:
        config = load_config(args.config).with_overrides(
            task=args.task,
            out=args.out,
            tol=args.tol,
            unsafe=True if args.unsafe_skip_smallness else None,
            seed=args.seed,
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["usage-error"]

    report = execute(config)
    if report.error is not None:
        print(f"error: {_describe(report.error)}", file=sys.stderr)
    try:
        written = write_report(report, config.output.directory, config.output.formats)
    except ReportIOError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["usage-error"]
    for path in written:
        logger.info("wrote %s", path)
    if not args.quiet:
        failed = f" (failed: {', '.join(report.failed)})" if report.failed else ""
        print(f"{report.task}: {report.status}{failed}")
    return report.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
