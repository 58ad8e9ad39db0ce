"""
Solution validation, clustering metrics, the epsilon-constraint sweep and the
batch experiment harness.

Metrics are recomputed from the memberships (y, x) alone, independently of
the solver's objective, so they double as a check on the linearization.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import combinations, permutations
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from .config import FEASIBILITY_TOL, config
from .connectivity import ConnectivityReport, check_connectivity
from .graph import GeneratorConfig, Graph, generate_random
from .model import (
    ASSOC_BOUND,
    BALANCE,
    CONNECTIVITY,
    MEMBERSHIP,
    MIN_SIZE,
    OVERLAP,
    VERTEX_LOGIC,
    ClusterParams,
    ObjectiveKind,
    build_model,
    x_name,
    y_name,
)
from .solver import Solution, SolveLimits, SolverBackend, SolveStatus, get_backend, solve
from .utils import ParameterError, SolverError, ensure_dir, safe_ratio, write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """A row that fails by ``slack`` (a positive amount) at the feasibility tolerance."""

    family: str
    name: str
    slack: float


@dataclass(frozen=True)
class ClusterReport:
    kappa: Mapping[Tuple[int, int], float]
    assoc: Mapping[int, float]
    total_cut: float
    total_assoc: float
    ratio_r: float
    balance_ok: bool
    overlap_ok: bool
    membership_ok: bool
    connectivity: ConnectivityReport
    violations: Tuple[Violation, ...] = ()
    overlap_vertices: Mapping[int, Mapping[int, float]] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    def violated_families(self) -> List[str]:
        return sorted({v.family for v in self.violations})

    def to_dict(self) -> dict:
        return {
            "kappa": [
                {"from": c1, "to": c2, "value": value}
                for (c1, c2), value in sorted(self.kappa.items())
            ],
            "assoc": {str(c): value for c, value in sorted(self.assoc.items())},
            "total_cut": self.total_cut,
            "total_assoc": self.total_assoc,
            "ratio_r": _json_number(self.ratio_r),
            "ratio_sum": _json_number(ratio_objective_value(self)),
            "balance_ok": self.balance_ok,
            "overlap_ok": self.overlap_ok,
            "membership_ok": self.membership_ok,
            "connectivity": self.connectivity.to_dict(),
            "overlap_vertices": {
                str(i): {str(c): x for c, x in sorted(shares.items())}
                for i, shares in sorted(self.overlap_vertices.items())
            },
            "violations": [asdict(v) for v in self.violations],
        }


def _json_number(value: float) -> Union[float, str]:
    return "inf" if math.isinf(value) else value


# --- Metrics ---
def cluster_metrics(
    g: Graph, k: int, y: Mapping[Tuple[int, int], int], x: Mapping[Tuple[int, int], float]
) -> Tuple[Dict[Tuple[int, int], float], Dict[int, float]]:
    """Inter-cluster cut per ordered pair and association per cluster.

    An edge (i, j), i < j, contributes w (x_i,c1 + x_j,c2) to the cut of
    (c1, c2) when i is in c1 and j is in c2 but not both lie in c1 and c2.
    """
    def yv(i: int, c: int) -> int:
        return y.get((i, c), 0)

    def xv(i: int, c: int) -> float:
        return x.get((i, c), 0.0)

    kappa = {pair: 0.0 for pair in permutations(range(k), 2)}
    assoc = {c: 0.0 for c in range(k)}
    for i, j, w in g.edges:
        for c1, c2 in kappa:
            if not (yv(i, c1) and yv(j, c2)):
                continue
            if yv(i, c2) and yv(j, c1):
                continue
            kappa[(c1, c2)] += w * (xv(i, c1) + xv(j, c2))
        for c in range(k):
            if yv(i, c) and yv(j, c):
                assoc[c] += w * (xv(i, c) + xv(j, c))
    return kappa, assoc


def ratio_objective_value(report: ClusterReport) -> float:
    """Sum over ordered cluster pairs of kappa(c1, c2) / (A(c1) + A(c2))."""
    return sum(
        safe_ratio(value, report.assoc[c1] + report.assoc[c2])
        for (c1, c2), value in report.kappa.items()
    )


# --- Validation ---
def _first_principles_checks(g: Graph, p: ClusterParams, s: Solution, tol: float) -> List[Violation]:
    n, k = g.n, p.k
    found: List[Violation] = []

    def y(i: int, c: int) -> int:
        return s.y.get((i, c), 0)

    def x(i: int, c: int) -> float:
        return s.x.get((i, c), 0.0)

    def check(family: str, name: str, slack: float):
        if slack < -tol:
            found.append(Violation(family, name, -slack))

    for i in range(n):
        for c in range(k):
            check(MEMBERSHIP, f"memb_ub_{i}_{c}", y(i, c) - x(i, c))
            if y(i, c):
                check(MEMBERSHIP, f"memb_lb_{i}_{c}", x(i, c) - p.mu)
        assigned = 1 if any(y(i, c) for c in range(k)) else 0
        total = sum(x(i, c) for c in range(k))
        check(VERTEX_LOGIC, f"msum_{i}", -abs(total - assigned))

    sums = [sum(x(i, c) for i in range(n)) for c in range(k)]
    for c1, c2 in permutations(range(k), 2):
        check(BALANCE, f"bal_lo_{c1}_{c2}", sums[c2] - (1 - p.delta) * sums[c1])
        check(BALANCE, f"bal_hi_{c1}_{c2}", (1 + p.delta) * sums[c1] - sums[c2])

    members = [s.members(c) for c in range(k)]
    for c1, c2 in combinations(range(k), 2):
        shared = len(members[c1] & members[c2])
        check(OVERLAP, f"ovl_cap_a_{c1}_{c2}", p.nu * len(members[c1]) - shared)
        check(OVERLAP, f"ovl_cap_b_{c1}_{c2}", p.nu * len(members[c2]) - shared)

    for c in range(k):
        inside = sum(1 for i, j, _ in g.edges if i in members[c] and j in members[c])
        check(CONNECTIVITY, f"span_count_{c}", 1 - (len(members[c]) - inside))
        for i in sorted(members[c]):
            if not g.neighbors(i) & members[c]:
                check(CONNECTIVITY, f"degree_{i}_{c}", -1.0)

    if p.min_size_active:
        check(MIN_SIZE, "min_size", sum(len(m) for m in members) - p.sigma * n)
    return found


def _model_row_checks(g: Graph, p: ClusterParams, s: Solution, tol: float) -> List[Violation]:
    """Evaluate every model row on the solver's raw values, with y and x as stored."""
    values = dict(s.values)
    for (i, c), value in s.y.items():
        values[y_name(i, c)] = float(value)
    for (i, c), value in s.x.items():
        values[x_name(i, c)] = value
    # size ordering is a labelling convention, not a clustering property
    model = build_model(g, replace(p, break_symmetry=False))
    return [
        Violation(con.family, con.name, -slack)
        for con in model.constraints
        if (slack := con.slack(values)) < -tol
    ]


def validate_solution(
    g: Graph, p: ClusterParams, s: Solution, tol: Optional[float] = None
) -> ClusterReport:
    """Re-check the constraints and recompute the cut/association metrics.

    Violations are returned in the report, never raised. Rows involving
    auxiliary indicators are only checked when the solution carries the
    solver's raw values.
    """
    tol = FEASIBILITY_TOL if tol is None else tol
    k = p.k
    for key, value in s.y.items():
        if value not in (0, 1):
            raise ParameterError(f"y{key} = {value} is not integral")
        if key[0] >= g.n or key[1] >= k:
            raise ParameterError(f"y{key} lies outside n={g.n}, K={k}")

    violations = _first_principles_checks(g, p, s, tol)
    kappa, assoc = cluster_metrics(g, k, s.y, s.x)
    total_cut, total_assoc = sum(kappa.values()), sum(assoc.values())
    if p.assoc_lower_bound is not None and total_assoc < p.assoc_lower_bound - tol:
        violations.append(Violation(ASSOC_BOUND, "assoc_lb", p.assoc_lower_bound - total_assoc))
    if s.values and g.m:
        reported = {v.name for v in violations}
        violations.extend(v for v in _model_row_checks(g, p, s, tol) if v.name not in reported)

    families = {v.family for v in violations}
    overlap_vertices = {}
    for i in range(g.n):
        shares = {c: s.x.get((i, c), 0.0) for c in range(k) if s.y.get((i, c), 0)}
        if len(shares) > 1:
            overlap_vertices[i] = shares
    report = ClusterReport(
        kappa=kappa,
        assoc=assoc,
        total_cut=total_cut,
        total_assoc=total_assoc,
        ratio_r=safe_ratio(total_cut, total_assoc),
        balance_ok=BALANCE not in families,
        overlap_ok=OVERLAP not in families,
        membership_ok=not families & {MEMBERSHIP, VERTEX_LOGIC},
        connectivity=check_connectivity(g, s, k),
        violations=tuple(violations),
        overlap_vertices=overlap_vertices,
    )
    if violations:
        logger.warning(f"Solution violates {len(violations)} row(s) in {sorted(families)}")
    return report


# --- Epsilon-constraint sweep ---
@dataclass(frozen=True)
class SweepRow:
    step: int
    kind: str
    bound: Optional[float]
    status: str
    objective: float
    total_cut: float
    total_assoc: float
    ratio_r: float
    ratio_sum: float
    con_percent: float


def _sweep_row(step: int, kind: str, bound, g: Graph, p: ClusterParams, s: Solution) -> SweepRow:
    if not s.has_incumbent:
        nan = math.nan
        return SweepRow(step, kind, bound, s.status.value, nan, nan, nan, nan, nan, nan)
    report = validate_solution(g, p, s)
    return SweepRow(
        step=step,
        kind=kind,
        bound=bound,
        status=s.status.value,
        objective=s.objective,
        total_cut=report.total_cut,
        total_assoc=report.total_assoc,
        ratio_r=report.ratio_r,
        ratio_sum=ratio_objective_value(report),
        con_percent=100.0 * report.connectivity.fraction_connected,
    )


def epsilon_sweep(
    g: Graph,
    p: ClusterParams,
    limits: Optional[SolveLimits] = None,
    backend: Optional[SolverBackend] = None,
    steps: Optional[int] = None,
    anchor_at_w1: bool = False,
) -> List[SweepRow]:
    """Trace the cut/association trade-off.

    Row 0 is the plain min-cut solution (its association is w1), rows
    1..steps minimize the cut subject to total association >= l_j with
    l_j = (j/steps)(w2 - w1), or w1 + (j/steps)(w2 - w1) when
    ``anchor_at_w1`` is set, and the last row is the max-association
    solution (objective w2). A bounded row whose solve fails is recorded
    with its status and NaN metrics.
    """
    steps = config.sweep.steps if steps is None else steps
    if steps < 1:
        raise ParameterError(f"sweep needs at least one step, got {steps}")
    backend = backend or get_backend()
    cut_params = p.with_objective(ObjectiveKind.MIN_CUT, assoc_lower_bound=None)
    assoc_params = p.with_objective(ObjectiveKind.MAX_ASSOCIATION, assoc_lower_bound=None)

    base = solve(build_model(g, cut_params), limits, backend)
    if not base.has_incumbent:
        raise SolverError(f"min-cut endpoint of the sweep is {base.status.value}")
    rows = [_sweep_row(0, ObjectiveKind.MIN_CUT.value, None, g, cut_params, base)]
    top = solve(build_model(g, assoc_params), limits, backend)
    if not top.has_incumbent:
        raise SolverError(f"max-association endpoint of the sweep is {top.status.value}")
    w1, w2 = rows[0].total_assoc, top.objective
    logger.info(f"Sweep endpoints: w1={w1:.6g}, w2={w2:.6g}")

    for j in range(1, steps + 1):
        bound = (j / steps) * (w2 - w1) + (w1 if anchor_at_w1 else 0.0)
        bound = max(0.0, bound)
        bounded = cut_params.with_objective(ObjectiveKind.MIN_CUT, assoc_lower_bound=bound)
        solution = solve(build_model(g, bounded), limits, backend)
        rows.append(_sweep_row(j, "bounded", bound, g, bounded, solution))
        logger.info(f"Sweep step {j}/{steps}: bound={bound:.6g} status={solution.status.value}")
    rows.append(_sweep_row(steps + 1, ObjectiveKind.MAX_ASSOCIATION.value, None, g, assoc_params, top))
    return rows


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows])


# --- Batch harness ---
@dataclass(frozen=True)
class InstanceResult:
    class_name: str
    seed: int
    objective: str
    status: str
    opt_seconds: float
    gap: float
    r: float
    con_percent: float
    connected: int
    nonempty: int
    error: str = ""


def _run_instance(
    cfg: GeneratorConfig,
    p: ClusterParams,
    limits: Optional[SolveLimits],
    backend: SolverBackend,
) -> InstanceResult:
    nan = math.nan
    try:
        g = generate_random(cfg)
        solution = solve(build_model(g, p), limits, backend)
    except Exception as e:
        logger.error(f"Instance {cfg.class_name} seed={cfg.seed} failed: {e}", exc_info=True)
        return InstanceResult(cfg.class_name, cfg.seed, p.objective.value, "error", nan, nan, nan, nan, 0, 0, str(e))
    if not solution.has_incumbent:
        return InstanceResult(
            cfg.class_name, cfg.seed, p.objective.value, solution.status.value,
            solution.solve_seconds, nan, nan, nan, 0, 0,
        )
    report = validate_solution(g, p, solution)
    connectivity = report.connectivity
    return InstanceResult(
        class_name=cfg.class_name,
        seed=cfg.seed,
        objective=p.objective.value,
        status=solution.status.value,
        opt_seconds=solution.solve_seconds,
        gap=solution.mip_gap,
        r=report.ratio_r,
        con_percent=100.0 * connectivity.fraction_connected,
        connected=connectivity.connected_count,
        nonempty=connectivity.nonempty_count,
    )


@dataclass
class BatchStats:
    instances: pd.DataFrame
    classes: pd.DataFrame

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        directory = ensure_dir(out_dir)
        instances_path = directory / "instances.csv"
        stats_path = directory / "stats.csv"
        self.instances.to_csv(instances_path, index=False)
        self.classes.to_csv(stats_path, index=False, na_rep="-")
        records = json.loads(self.classes.to_json(orient="records"))
        json_path = write_json({"classes": records}, directory / "stats.json")
        return [instances_path, stats_path, json_path]


def _class_stats(instances: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for (class_name, objective), group in instances.groupby(["class_name", "objective"], sort=False):
        optimal = group[group["status"] == SolveStatus.OPTIMAL.value]
        with_incumbent = group[group["status"].isin([SolveStatus.OPTIMAL.value, SolveStatus.FEASIBLE.value])]
        gaps = with_incumbent["gap"].replace([math.inf], math.nan).dropna()
        ratios = with_incumbent["r"].replace([math.inf], math.nan).dropna()
        nonempty = int(group["nonempty"].sum())
        solved, unsolved = len(optimal), len(group) - len(optimal)
        rows.append(
            {
                "class_name": class_name,
                "objective": objective,
                "instances": len(group),
                "solved": solved,
                "unsolved": unsolved,
                "counts": f"({solved}/{unsolved})",
                "opt_mean": optimal["opt_seconds"].mean() if solved else math.nan,
                "opt_std": optimal["opt_seconds"].std() if solved else math.nan,
                "gap_mean": gaps.mean() if len(gaps) else math.nan,
                "gap_std": gaps.std() if len(gaps) else math.nan,
                "r_mean": ratios.mean() if len(ratios) else math.nan,
                "r_std": ratios.std() if len(ratios) else math.nan,
                "con_percent": 100.0 * group["connected"].sum() / nonempty if nonempty else math.nan,
            }
        )
    return pd.DataFrame(rows)


def run_batch(
    classes: Sequence[GeneratorConfig],
    p: ClusterParams,
    limits: Optional[SolveLimits] = None,
    backend: Optional[SolverBackend] = None,
    objectives: Optional[Sequence[ObjectiveKind]] = None,
    workers: Optional[int] = None,
) -> BatchStats:
    """Solve every generated instance and aggregate per class and objective.

    ``classes`` holds one ``GeneratorConfig`` per instance (class settings
    plus seed). Instances are attempted independently; a failure becomes an
    ``error`` row.
    """
    backend = backend or get_backend()
    objectives = list(objectives or [p.objective])
    workers = workers or config.batch.workers
    jobs = [(cfg, p.with_objective(kind)) for kind in objectives for cfg in classes]
    logger.info(f"Running {len(jobs)} batch instance(s) with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda job: _run_instance(job[0], job[1], limits, backend), jobs))
    columns = [f.name for f in fields(InstanceResult)]
    instances = pd.DataFrame([asdict(r) for r in results], columns=columns)
    return BatchStats(instances=instances, classes=_class_stats(instances))
