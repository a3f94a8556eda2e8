"""
Main entry point for svperturb.
"""
import argparse
import json
import os
import sys
from typing import List, NoReturn, Optional

from pydantic import ValidationError

from config.environments import activate_config, get_config
from config.logging import configure_logging, get_logger, log_error
from config.settings import resolve_threads, settings
from src.commands import COMMANDS
from src.models.enums import ExitCode
from src.models.exceptions import SpectralException
from src.services.service_container import service_container


class CliArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the usage exit code"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE_ERROR.value, f"{self.prog}: error: {message}\n")


def build_parser() -> CliArgumentParser:
    """Parse command line arguments."""
    parser = CliArgumentParser(
        prog="svperturb",
        description="Singular-vector perturbation analysis under Gaussian noise",
    )
    parser.add_argument("--version", action="version", version=settings.version_string)
    parser.add_argument(
        "--env",
        "-e",
        choices=["development", "testing", "production"],
        default=os.environ.get("SVPERTURB_ENVIRONMENT", settings.environment),
        help="Environment whose configuration overrides apply",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="Override the configured log level",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _report_failure(error: SpectralException) -> int:
    log_error(error, {"exit_code": error.exit_code.value})
    print(json.dumps(error.to_dict(), default=str), file=sys.stderr)
    return error.exit_code.value


def _report_unexpected(error: Exception) -> int:
    exit_code = ExitCode.USAGE_ERROR if isinstance(error, OSError) else ExitCode.NUMERICAL_FAILURE
    log_error(error, {"exit_code": exit_code.value})
    print(json.dumps({"error": type(error).__name__, "message": str(error)}), file=sys.stderr)
    return exit_code.value


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point."""
    args = build_parser().parse_args(argv)

    try:
        config = activate_config(get_config(args.env))
        threads = resolve_threads(getattr(args, "threads", None))
    except (ValueError, ValidationError) as e:
        print(f"svperturb: error: invalid configuration: {e}", file=sys.stderr)
        return ExitCode.USAGE_ERROR.value

    configure_logging(args.log_level or config.logging.level, config.environment)
    logger = get_logger(__name__)
    service_container.reset(threads)

    logger.debug("Running command", command=args.command, threads=threads, version=settings.app_version)
    try:
        return args.handler(args).value
    except SpectralException as e:
        return _report_failure(e)
    except ValidationError as e:
        log_error(e, {"exit_code": ExitCode.USAGE_ERROR.value})
        print(f"svperturb: error: invalid configuration: {e}", file=sys.stderr)
        return ExitCode.USAGE_ERROR.value
    except Exception as e:
        return _report_unexpected(e)


if __name__ == "__main__":
    sys.exit(main())
