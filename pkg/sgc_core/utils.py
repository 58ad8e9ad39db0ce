import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Optional, Union

from .config import config

logging.basicConfig(
    level=getattr(logging, config.logging.level), format=config.logging.format
)
logger = logging.getLogger(__name__)


# --- Exception Classes ---
class SoftClusteringError(Exception):
    pass


class GraphFormatError(SoftClusteringError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParameterError(SoftClusteringError):
    pass


class ModelError(SoftClusteringError):
    pass


class SolverError(SoftClusteringError):
    pass


class BackendNotFoundError(SolverError):
    pass


class BackendCrashError(SolverError):
    pass


class SolutionParseError(SolverError):
    pass


class EnumerationLimitError(SoftClusteringError):
    pass


# --- Numeric Helpers ---
def round_binary(value: float, name: str = "") -> int:
    """Round a binary value reported by a solver, warning when it is off-integral."""
    rounded = int(round(value))
    if abs(value - rounded) > config.tolerance.integrality:
        logger.warning(
            f"Binary {name or '?'} has fractional value {value}; rounding to {rounded}"
        )
    return min(1, max(0, rounded))


def clamp(value: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, value))


def safe_ratio(numerator: float, denominator: float) -> float:
    """numerator/denominator with 0/0 -> 0 and x/0 -> inf."""
    tol = config.tolerance.feasibility
    if abs(denominator) <= tol:
        return 0.0 if abs(numerator) <= tol else math.inf
    return numerator / denominator


# --- File Helpers ---
def ensure_dir(path: Union[str, Path]) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise SoftClusteringError(f"Output directory is not writable: {directory}")
    return directory


def write_json(data: Any, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {target}")
    return target
