"""Run commands: each writes its artifacts and a manifest into an output directory."""

import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple

import structlog

from .. import __version__
from ..config import RunConfig
from ..datasets import file_digest, write_json
from ..models import ErrorCode, RunManifest, ValleyMapError
from .benchmark import magnetospec
from .extraction import extract, fit_anticrossing
from .results import CommandResult
from .synthesis import simulate_map, synth_landscape

logger = structlog.get_logger(__name__)

MANIFEST_NAME = "manifest.json"


class CommandSpec(NamedTuple):
    """A runnable command and its one-line description."""

    name: str
    description: str
    handler: Callable[[RunConfig, Path], CommandResult]


class ValleyMapCommands:
    """Dispatcher for the valleymap run commands."""

    def __init__(self) -> None:
        self._commands: Dict[str, CommandSpec] = {
            spec.name: spec
            for spec in (
                CommandSpec("synth-landscape", "Synthesize a correlated Rician valley landscape", synth_landscape),
                CommandSpec("simulate-map", "Simulate singlet-probability maps", simulate_map),
                CommandSpec("extract", "Extract ridges, the E_VS map, correlation and distributions", extract),
                CommandSpec("fit-anticrossing", "Fit the spin-valley model to a nu(B) table", fit_anticrossing),
                CommandSpec("magnetospec", "Magnetospectroscopy and triangulation benchmark", magnetospec),
            )
        }

    def get_commands(self) -> List[CommandSpec]:
        """List of available commands."""
        return list(self._commands.values())

    def run(self, name: str, config: RunConfig, output_dir: Path) -> RunManifest:
        """Run a command, then write and return its manifest."""
        spec = self._commands.get(name)
        if spec is None:
            raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Unknown command: {name}", {"commands": sorted(self._commands)})
        config = config.model_copy(update={"command": name, "output_dir": str(output_dir)})
        output_dir.mkdir(parents=True, exist_ok=True)
        started_at = datetime.now(timezone.utc).isoformat()
        start = time.perf_counter()
        logger.info("Command started", command=name, output_dir=str(output_dir))
        try:
            result = spec.handler(config, output_dir)
        except ValleyMapError as e:
            logger.error("Command failed", command=name, code=e.code, error=e.message, details=e.details)
            raise

        manifest = RunManifest(
            command=name,
            tool_version=__version__,
            config=config.echo(),
            started_at=started_at,
            duration_seconds=time.perf_counter() - start,
            inputs={str(path): file_digest(path) for path in result.inputs},
            outputs={path.relative_to(output_dir).as_posix(): file_digest(path) for path in result.outputs},
            summary=result.summary,
        )
        write_json(output_dir / MANIFEST_NAME, manifest)
        logger.info("Command finished", command=name, outputs=len(result.outputs), seconds=manifest.duration_seconds)
        return manifest


__all__ = ["CommandResult", "CommandSpec", "MANIFEST_NAME", "ValleyMapCommands"]
