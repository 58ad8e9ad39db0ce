"""
Configuration management for the Soft Graph Clustering toolkit.
Centralizes solver settings, clustering defaults, tolerances and logging.
"""

import os
from typing import Dict, Any, Optional
from dataclasses import dataclass, asdict
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


@dataclass
class SolverConfig:
    backend: str = "cbc"
    executable: Optional[str] = None
    time_limit: float = 600.0
    threads: int = 1
    mip_gap: Optional[float] = None
    work_dir: Optional[str] = None
    grace_seconds: float = 60.0


@dataclass
class ClusterDefaults:
    # mu, delta and nu are not reported for the published experiments
    k: int = 3
    mu: float = 0.05
    delta: float = 0.2
    nu: float = 0.5
    sigma: float = 0.7
    break_symmetry: bool = True


@dataclass
class ConnectivityConfig:
    max_rounds: int = 10


@dataclass
class SweepConfig:
    steps: int = 10


@dataclass
class BatchConfig:
    instances_per_class: int = 5
    workers: int = 1


@dataclass
class ToleranceConfig:
    integrality: float = 1e-6
    feasibility: float = 1e-6


@dataclass
class LoggingConfig:
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    include_traceback: bool = True


def _flag(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


class Config:
    def __init__(self):
        self.solver = SolverConfig()
        self.defaults = ClusterDefaults()
        self.connectivity = ConnectivityConfig()
        self.sweep = SweepConfig()
        self.batch = BatchConfig()
        self.tolerance = ToleranceConfig()
        self.logging = LoggingConfig()
        self._load_environment_overrides()

    def _load_environment_overrides(self):
        def override(attr_path: str, env_var: str, cast_type=None):
            value = os.getenv(env_var)
            if value is not None:
                obj = self
                attrs = attr_path.split(".")
                for attr in attrs[:-1]:
                    obj = getattr(obj, attr)
                if cast_type:
                    value = cast_type(value)
                setattr(obj, attrs[-1], value)

        override("solver.backend", "SGC_BACKEND", str.lower)
        override("solver.executable", "SGC_SOLVER_PATH")
        override("solver.time_limit", "SGC_TIME_LIMIT", float)
        override("solver.threads", "SGC_THREADS", int)
        override("solver.work_dir", "SGC_WORK_DIR")
        override("defaults.break_symmetry", "SGC_BREAK_SYMMETRY", _flag)
        override("batch.workers", "SGC_BATCH_WORKERS", int)
        override("logging.level", "LOG_LEVEL", str.upper)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "solver": asdict(self.solver),
            "defaults": asdict(self.defaults),
            "connectivity": asdict(self.connectivity),
            "sweep": asdict(self.sweep),
            "batch": asdict(self.batch),
            "tolerance": asdict(self.tolerance),
            "logging": asdict(self.logging),
        }


config = Config()

FEASIBILITY_TOL = config.tolerance.feasibility
