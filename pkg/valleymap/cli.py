"""Command-line entry point for valleymap."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import structlog
from pydantic import ValidationError

from .commands import ValleyMapCommands
from .config import Settings, load_run_config, load_settings
from .models import EXIT_CODES, ErrorCode, ValleyMapError

# Configure structured logging
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer(),
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    cache_logger_on_first_use=True,
)

logger = structlog.get_logger(__name__)


def configure_logging(level: str) -> None:
    """Route stdlib logging, and with it structlog, to stderr."""
    logging.basicConfig(
        stream=sys.stderr,
        format="%(message)s",
        level=getattr(logging, level, logging.INFO),
        force=True,
    )


def _overrides(args: argparse.Namespace) -> List[str]:
    """Flags translated to ``KEY=VALUE`` config overrides, followed by explicit ``--set`` entries."""
    overrides = []
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.shots is not None:
        overrides.append(f"noise.shots={args.shots}")
    if args.landscape is not None:
        overrides.append(f"landscape_path={json.dumps(args.landscape)}")
    if args.maps:
        overrides.append(f"map_paths={json.dumps(args.maps)}")
    if args.nu is not None:
        overrides.append(f"nu_path={json.dumps(args.nu)}")
    return overrides + list(args.overrides)


def build_parser(commands: ValleyMapCommands) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="valleymap",
        description="Valley-splitting mapping by conveyor-mode shuttling: simulate, extract, fit.",
    )
    parser.add_argument("--env-file", help="Path to a .env file")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for spec in commands.get_commands():
        sub = subparsers.add_parser(spec.name, help=spec.description, description=spec.description)
        sub.add_argument("-c", "--config", help="Run configuration JSON")
        sub.add_argument("-o", "--output", help="Output directory")
        sub.add_argument("--seed", type=int, help="Global seed")
        sub.add_argument("--shots", type=int, help="Shots per pixel, 0 for the exact probability")
        sub.add_argument("--landscape", help="Landscape JSON file")
        sub.add_argument("--map", dest="maps", action="append", default=[], help="Probability map CSV (repeatable)")
        sub.add_argument("--nu", help="nu(B) table CSV")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Override a config key, e.g. landscape.pitch=1.4",
        )
    return parser


def _output_dir(args: argparse.Namespace, configured: Optional[str], settings: Settings) -> Path:
    if args.output:
        return Path(args.output)
    if configured:
        return Path(configured)
    return Path(settings.output_root) / args.command


def _fail(code: ErrorCode, message: str, details: Optional[Dict[str, Any]] = None) -> int:
    logger.error("Command failed", code=code.value, error=message, details=details or {})
    return EXIT_CODES[code.value]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    commands = ValleyMapCommands()
    args = build_parser(commands).parse_args(argv)
    try:
        settings = load_settings(args.env_file)
    except ValidationError as e:
        configure_logging("INFO")
        return _fail(ErrorCode.INVALID_INPUT, "Invalid settings", {"errors": e.errors(include_url=False)})
    configure_logging(settings.log_level)

    try:
        config = load_run_config(args.config, _overrides(args))
    except ValidationError as e:
        return _fail(ErrorCode.INVALID_INPUT, "Invalid run configuration", {"errors": e.errors(include_url=False)})
    except (OSError, ValueError) as e:
        return _fail(ErrorCode.INVALID_INPUT, str(e))

    output_dir = _output_dir(args, config.output_dir, settings)
    try:
        manifest = commands.run(args.command, config, output_dir)
    except ValleyMapError as e:
        return e.exit_code
    except ValidationError as e:
        return _fail(ErrorCode.INVALID_INPUT, "Invalid value", {"errors": e.errors(include_url=False)})
    except np.linalg.LinAlgError as e:
        return _fail(ErrorCode.NUMERICAL_FAILURE, str(e))
    except (OSError, ValueError) as e:
        return _fail(ErrorCode.INVALID_INPUT, str(e))

    print(json.dumps({"command": manifest.command, "output_dir": str(output_dir), **manifest.summary}, sort_keys=True, default=str))
    return 0


def main_sync() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    main_sync()
