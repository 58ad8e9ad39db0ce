"""
JSON documents exchanged through the command line (see docs/SCHEMAS.md).
"""

import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .baselines import SoftClustering
from .config import config
from .graph import GeneratorConfig
from .model import ClusterParams, ObjectiveKind
from .solver import Solution, SolveStatus


def _finite_or_none(value: float) -> Optional[float]:
    return None if value is None or math.isnan(value) or math.isinf(value) else value


class ParamsDocument(BaseModel):
    k: int
    mu: float
    delta: float
    nu: float
    sigma: float
    objective: ObjectiveKind
    assoc_lower_bound: Optional[float] = None
    enable_time_constraints: bool = False
    enable_min_size: Optional[bool] = None
    break_symmetry: bool = False

    @classmethod
    def from_params(cls, p: ClusterParams) -> "ParamsDocument":
        return cls(
            k=p.k,
            mu=p.mu,
            delta=p.delta,
            nu=p.nu,
            sigma=p.sigma,
            objective=p.objective,
            assoc_lower_bound=p.assoc_lower_bound,
            enable_time_constraints=p.enable_time_constraints,
            enable_min_size=p.enable_min_size,
            break_symmetry=p.break_symmetry,
        )

    def to_params(self) -> ClusterParams:
        return ClusterParams(**self.model_dump())


class SolutionDocument(BaseModel):
    """A solved model: y and x as n x K matrices plus the raw solver values."""

    n: int
    k: int
    status: SolveStatus
    objective: Optional[float] = None
    mip_gap: Optional[float] = None
    solve_seconds: float = 0.0
    backend: str = ""
    params: ParamsDocument
    y: List[List[int]]
    x: List[List[float]]
    values: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_shapes(self):
        for label, matrix in (("y", self.y), ("x", self.x)):
            if len(matrix) != self.n or any(len(row) != self.k for row in matrix):
                raise ValueError(f"{label} must be an {self.n} x {self.k} matrix")
        if self.params.k != self.k:
            raise ValueError(f"params.k={self.params.k} disagrees with k={self.k}")
        return self

    @classmethod
    def from_solution(cls, s: Solution, n: int, p: ClusterParams) -> "SolutionDocument":
        return cls(
            n=n,
            k=p.k,
            status=s.status,
            objective=_finite_or_none(s.objective),
            mip_gap=_finite_or_none(s.mip_gap),
            solve_seconds=s.solve_seconds,
            backend=s.backend,
            params=ParamsDocument.from_params(p),
            y=[[int(s.y.get((i, c), 0)) for c in range(p.k)] for i in range(n)],
            x=[[float(s.x.get((i, c), 0.0)) for c in range(p.k)] for i in range(n)],
            values=dict(s.values),
        )

    def to_solution(self) -> Solution:
        return Solution(
            status=self.status,
            objective=math.nan if self.objective is None else self.objective,
            mip_gap=math.inf if self.mip_gap is None else self.mip_gap,
            y={(i, c): self.y[i][c] for i in range(self.n) for c in range(self.k)},
            x={(i, c): self.x[i][c] for i in range(self.n) for c in range(self.k)},
            solve_seconds=self.solve_seconds,
            values=dict(self.values),
            backend=self.backend,
        )


class ClusteringDocument(BaseModel):
    """A baseline clustering, the solution document shape without x."""

    n: int
    origin: str
    clusters: List[List[int]]
    settings: Dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_clustering(cls, result: SoftClustering, n: int, **settings) -> "ClusteringDocument":
        return cls(
            n=n,
            origin=result.origin.value,
            clusters=[sorted(c) for c in result.clusters],
            settings=settings,
        )


class ClassSpec(BaseModel):
    n: int
    density: float
    max_weight: int
    seeds: Optional[List[int]] = None

    @field_validator("density")
    @classmethod
    def check_density(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError(f"density must lie in (0, 1], got {value}")
        return value

    def instances(self) -> List[GeneratorConfig]:
        seeds = self.seeds or list(range(1, config.batch.instances_per_class + 1))
        return [GeneratorConfig(self.n, self.density, self.max_weight, seed) for seed in seeds]


class BatchManifest(BaseModel):
    classes: List[ClassSpec]

    def instances(self) -> List[GeneratorConfig]:
        return [cfg for spec in self.classes for cfg in spec.instances()]
