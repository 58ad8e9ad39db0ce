"""
Post-hoc cluster connectivity checks and the lazy no-good-cut loop.

The span, degree and time constraints of the model only approximate
connectivity; a cluster can still split into several components. The lazy
loop re-solves with the offending incumbent cut off until every cluster is
connected or the round budget runs out.
"""

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

from .config import config
from .graph import Graph, induced_components
from .model import ClusterParams, build_model, nogood_cut
from .solver import Solution, SolveLimits, SolverBackend, get_backend, solve
from .utils import ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterConnectivity:
    cluster: int
    members: FrozenSet[int]
    connected: bool
    components: int


@dataclass(frozen=True)
class ConnectivityReport:
    per_cluster: Tuple[ClusterConnectivity, ...] = ()

    @property
    def nonempty_count(self) -> int:
        return sum(1 for c in self.per_cluster if c.members)

    @property
    def connected_count(self) -> int:
        return sum(1 for c in self.per_cluster if c.members and c.connected)

    @property
    def fraction_connected(self) -> float:
        """Connected clusters over nonempty clusters; 1.0 when all are empty."""
        if self.nonempty_count == 0:
            return 1.0
        return self.connected_count / self.nonempty_count

    @property
    def all_connected(self) -> bool:
        return self.connected_count == self.nonempty_count

    def to_dict(self) -> dict:
        return {
            "fraction_connected": self.fraction_connected,
            "clusters": [
                {
                    "cluster": c.cluster,
                    "members": sorted(c.members),
                    "connected": c.connected,
                    "components": c.components,
                }
                for c in self.per_cluster
            ],
        }


def check_connectivity(g: Graph, s: Solution, k: Optional[int] = None) -> ConnectivityReport:
    """Connectivity of the subgraph induced by each cluster's y-members."""
    if k is None:
        k = 1 + max((c for _, c in s.y), default=-1)
    clusters = []
    for c in range(k):
        members = frozenset(s.members(c))
        if not members:
            clusters.append(ClusterConnectivity(c, members, True, 0))
            continue
        components = len(induced_components(g, members))
        clusters.append(ClusterConnectivity(c, members, components == 1, components))
    return ConnectivityReport(tuple(clusters))


@dataclass(frozen=True)
class LazyRound:
    round: int
    status: str
    objective: float
    support: FrozenSet[Tuple[int, int]]
    fraction_connected: float


@dataclass(frozen=True)
class LazyResult:
    solution: Solution
    rounds_used: int
    report: ConnectivityReport
    history: Tuple[LazyRound, ...] = field(default_factory=tuple)
    exhausted: bool = False


def solve_with_lazy_connectivity(
    g: Graph,
    p: ClusterParams,
    limits: Optional[SolveLimits] = None,
    backend: Optional[SolverBackend] = None,
    max_rounds: Optional[int] = None,
) -> LazyResult:
    """Solve, then cut off each disconnected incumbent and re-solve.

    Every round appends ``sum(y over the incumbent support) <= |support| - 1``
    so the next incumbent differs in at least one active y.
    """
    max_rounds = config.connectivity.max_rounds if max_rounds is None else max_rounds
    if max_rounds < 1:
        raise ParameterError(f"max_rounds must be >= 1, got {max_rounds}")
    backend = backend or get_backend()
    model = build_model(g, p)
    history: List[LazyRound] = []
    for round_no in range(1, max_rounds + 1):
        solution = solve(model, limits, backend)
        report = check_connectivity(g, solution, p.k)
        history.append(
            LazyRound(
                round=round_no,
                status=solution.status.value,
                objective=solution.objective,
                support=frozenset(solution.support()),
                fraction_connected=report.fraction_connected,
            )
        )
        if not solution.has_incumbent or report.all_connected:
            logger.info(f"Lazy loop finished after {round_no} round(s)")
            return LazyResult(solution, round_no, report, tuple(history))
        if round_no == max_rounds:
            break
        disconnected = [c.cluster for c in report.per_cluster if not c.connected]
        logger.info(f"Round {round_no}: clusters {disconnected} disconnected, adding no-good cut")
        model = model.with_constraint(nogood_cut(solution.support(), name=f"nogood_{round_no}"))
    logger.warning(f"Lazy loop exhausted {max_rounds} round(s) with disconnected clusters")
    return LazyResult(solution, max_rounds, report, tuple(history), exhausted=True)
