"""Shared helpers of the run commands."""

from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from ..config import RunConfig
from ..models import ErrorCode, ValleyMapError


class CommandResult(NamedTuple):
    """Files a command read and wrote, and its machine-readable summary."""

    outputs: List[Path]
    inputs: List[Path]
    summary: Dict[str, Any]


def require_seed(config: RunConfig, purpose: str) -> int:
    if config.seed is None:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"A seed is required to {purpose}", {"command": config.command})
    return config.seed


def require_path(path: Optional[str], what: str) -> Path:
    if not path:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"No {what} given")
    target = Path(path)
    if not target.is_file():
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{what.capitalize()} not found: {target}")
    return target


def stream_seed(seed: int, *keys: int) -> int:
    """Independent integer seed for one sub-stream of a seeded run."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])
