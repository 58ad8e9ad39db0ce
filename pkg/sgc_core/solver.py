"""
External MILP solver driver.

Models are written as LP files and handed to a solver executable through a
``SolverBackend`` adapter; the solver's solution file is parsed back into a
``Solution``. The backend contract is documented in docs/BACKENDS.md.
"""

import logging
import math
import os
import re
import shutil
import subprocess
import tempfile
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations, combinations_with_replacement
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .config import config
from .graph import Graph
from .model import (
    ClusterParams,
    ModelIR,
    VarKind,
    build_model,
    emit_lp,
    eta_name,
    gam_name,
    l_name,
    s_name,
    t_name,
    x_name,
    y_name,
    z_name,
)
from .utils import (
    BackendCrashError,
    BackendNotFoundError,
    EnumerationLimitError,
    SolutionParseError,
    clamp,
    round_binary,
)

logger = logging.getLogger(__name__)

ORACLE_LIMIT = 24


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolveLimits:
    time_limit: float = 600.0
    mip_gap_target: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError(f"time limit must be positive, got {self.time_limit}")
        if self.threads < 1:
            raise ValueError(f"thread count must be positive, got {self.threads}")

    @classmethod
    def from_config(cls) -> "SolveLimits":
        return cls(
            time_limit=config.solver.time_limit,
            mip_gap_target=config.solver.mip_gap,
            threads=config.solver.threads,
        )


@dataclass(frozen=True)
class Solution:
    status: SolveStatus
    objective: float = math.nan
    mip_gap: float = 0.0
    y: Mapping[Tuple[int, int], int] = field(default_factory=dict)
    x: Mapping[Tuple[int, int], float] = field(default_factory=dict)
    solve_seconds: float = 0.0
    values: Mapping[str, float] = field(default_factory=dict)
    backend: str = ""

    @property
    def has_incumbent(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)

    def support(self) -> Set[Tuple[int, int]]:
        """The (vertex, cluster) pairs with y = 1."""
        return {key for key, value in self.y.items() if value == 1}

    def members(self, c: int) -> Set[int]:
        return {i for (i, cc), value in self.y.items() if cc == c and value == 1}

    def clusters(self, k: int) -> List[Set[int]]:
        return [self.members(c) for c in range(k)]


def make_solution(
    model: ModelIR,
    status: SolveStatus,
    raw: Mapping[str, float],
    mip_gap: float = 0.0,
    solve_seconds: float = 0.0,
    backend: str = "",
) -> Solution:
    """Round binaries, clamp continuous values and split out y and x."""
    if status not in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE):
        return Solution(status=status, mip_gap=mip_gap, solve_seconds=solve_seconds, backend=backend)
    values: Dict[str, float] = {}
    for var in model.variables:
        value = raw.get(var.name, 0.0)
        if var.kind == VarKind.BINARY:
            values[var.name] = float(round_binary(value, var.name))
        else:
            values[var.name] = clamp(value, var.lo, var.hi)
    y, x = {}, {}
    for i in range(model.n):
        for c in range(model.k):
            y[(i, c)] = int(values.get(y_name(i, c), 0.0))
            x[(i, c)] = values.get(x_name(i, c), 0.0)
    return Solution(
        status=status,
        objective=model.objective_value(values),
        mip_gap=mip_gap,
        y=y,
        x=x,
        solve_seconds=solve_seconds,
        values=values,
        backend=backend,
    )


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise SolutionParseError(f"line {lineno}: malformed number {token!r}") from None


def _check_known(name: str, model: ModelIR, lineno: int):
    if not model.has_variable(name):
        raise SolutionParseError(f"line {lineno}: unknown variable {name!r}")


# --- Backends ---
class SolverBackend(ABC):
    """Adapter for one LP-file-consuming MILP solver executable."""

    name: str = ""
    executable_name: str = ""

    def __init__(self, executable: Optional[str] = None):
        self._executable = executable

    def resolve_executable(self) -> str:
        candidates = [self._executable, config.solver.executable]
        for candidate in candidates:
            if candidate:
                found = shutil.which(candidate) or (candidate if os.path.isfile(candidate) else None)
                if found:
                    return found
                raise BackendNotFoundError(f"{self.name} executable not found: {candidate}")
        found = shutil.which(self.executable_name) or self._fallback_executable()
        if not found:
            raise BackendNotFoundError(
                f"Could not find the {self.name} executable; install it or set SGC_SOLVER_PATH"
            )
        return found

    def available(self) -> bool:
        try:
            self.resolve_executable()
            return True
        except BackendNotFoundError:
            return False

    def _fallback_executable(self) -> Optional[str]:
        return None

    @abstractmethod
    def params_text(self, limits: SolveLimits) -> str:
        """Contents of the parameter file written next to the model."""

    @abstractmethod
    def command(self, executable: str, model_path: Path, params_path: Path, solution_path: Path, limits: SolveLimits) -> List[str]:
        pass

    @abstractmethod
    def parse_solution_file(self, text: str, model: ModelIR) -> Solution:
        pass

    def parse_gap(self, log: str) -> Optional[float]:
        return None


class CbcBackend(SolverBackend):
    """COIN-OR CBC.

    Invocation: ``cbc -import model.lp -sec T -threads N [-ratioGap G]
    -timeMode elapsed -solve -solu solution.txt``; CBC takes its parameters as
    arguments, the parameter file records them for reproducibility.
    """

    name = "cbc"
    executable_name = "cbc"

    def _fallback_executable(self) -> Optional[str]:
        try:
            import pulp

            solver = pulp.PULP_CBC_CMD(msg=False)
            if solver.available():
                return solver.path
        except Exception as e:
            logger.debug(f"No CBC binary bundled with PuLP: {e}")
        return None

    def _arguments(self, limits: SolveLimits) -> List[str]:
        args = ["-sec", f"{limits.time_limit:g}", "-threads", str(limits.threads)]
        if limits.mip_gap_target is not None:
            args += ["-ratioGap", f"{limits.mip_gap_target:g}"]
        return args + ["-timeMode", "elapsed"]

    def params_text(self, limits: SolveLimits) -> str:
        return " ".join(self._arguments(limits)) + "\n"

    def command(self, executable, model_path, params_path, solution_path, limits):
        return (
            [executable, "-import", str(model_path)]
            + self._arguments(limits)
            + ["-solve", "-solu", str(solution_path)]
        )

    def parse_solution_file(self, text: str, model: ModelIR) -> Solution:
        lines = text.splitlines()
        if not lines:
            raise SolutionParseError("empty CBC solution file")
        header = lines[0].strip()
        lowered = header.lower()
        if lowered.startswith("optimal"):
            status = SolveStatus.OPTIMAL
        elif "infeasible" in lowered:
            status = SolveStatus.INFEASIBLE
        elif lowered.startswith("stopped") and "no integer solution" not in lowered:
            status = SolveStatus.FEASIBLE
        else:
            status = SolveStatus.UNKNOWN
        raw: Dict[str, float] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            tokens = line.replace("**", " ").split()
            if not tokens:
                continue
            if len(tokens) < 3:
                raise SolutionParseError(f"line {lineno}: cannot parse {line!r}")
            name = tokens[1]
            _check_known(name, model, lineno)
            raw[name] = _parse_float(tokens[2], lineno)
        return make_solution(model, status, raw, backend=self.name)

    def parse_gap(self, log: str) -> Optional[float]:
        match = re.search(r"^Gap:\s+([-+0-9.eE]+)", log, re.MULTILINE)
        return float(match.group(1)) if match else None


class HighsBackend(SolverBackend):
    """HiGHS command-line solver, a generic LP-format reader.

    Invocation: ``highs --model_file model.lp --options_file model.params
    --solution_file solution.txt``.
    """

    name = "highs"
    executable_name = "highs"

    def params_text(self, limits: SolveLimits) -> str:
        lines = [
            f"time_limit = {limits.time_limit:g}",
            f"threads = {limits.threads}",
            "write_solution_style = 0",
        ]
        if limits.mip_gap_target is not None:
            lines.append(f"mip_rel_gap = {limits.mip_gap_target:g}")
        return "\n".join(lines) + "\n"

    def command(self, executable, model_path, params_path, solution_path, limits):
        return [
            executable,
            "--model_file",
            str(model_path),
            "--options_file",
            str(params_path),
            "--solution_file",
            str(solution_path),
        ]

    def parse_solution_file(self, text: str, model: ModelIR) -> Solution:
        lines = [line.strip() for line in text.splitlines()]
        model_status = ""
        primal_feasible = False
        raw: Dict[str, float] = {}
        k = 0
        while k < len(lines):
            line = lines[k]
            if line == "Model status":
                k += 1
                while k < len(lines) and not lines[k]:
                    k += 1
                model_status = lines[k] if k < len(lines) else ""
            elif line == "# Primal solution values":
                primal_feasible = k + 1 < len(lines) and lines[k + 1] == "Feasible"
            elif re.match(r"^#?\s*Columns\s+\d+$", line):
                count = int(line.split()[-1])
                for offset in range(1, count + 1):
                    lineno = k + offset + 1
                    if k + offset >= len(lines):
                        raise SolutionParseError(f"line {lineno}: truncated column section")
                    tokens = lines[k + offset].split()
                    if len(tokens) < 2:
                        raise SolutionParseError(f"line {lineno}: cannot parse {lines[k + offset]!r}")
                    _check_known(tokens[0], model, lineno)
                    raw[tokens[0]] = _parse_float(tokens[1], lineno)
                k += count
                break
            k += 1
        if not model_status:
            raise SolutionParseError("HiGHS solution file has no model status")
        lowered = model_status.lower()
        if lowered == "optimal":
            status = SolveStatus.OPTIMAL
        elif "infeasible" in lowered:
            status = SolveStatus.INFEASIBLE
        elif primal_feasible:
            status = SolveStatus.FEASIBLE
        else:
            status = SolveStatus.UNKNOWN
        return make_solution(model, status, raw, backend=self.name)

    def parse_gap(self, log: str) -> Optional[float]:
        match = re.search(r"^\s*Gap\s+([-+0-9.eE]+)%", log, re.MULTILINE)
        return float(match.group(1)) / 100.0 if match else None


BACKENDS = {"cbc": CbcBackend, "highs": HighsBackend}


def get_backend(name: Optional[str] = None, executable: Optional[str] = None) -> SolverBackend:
    name = (name or config.solver.backend).lower()
    if name not in BACKENDS:
        raise BackendNotFoundError(f"Unknown backend {name!r}; choose from {sorted(BACKENDS)}")
    return BACKENDS[name](executable)


def parse_solution_file(text: str, m: ModelIR, backend: str = "cbc") -> Solution:
    return get_backend(backend).parse_solution_file(text, m)


def solve(
    m: ModelIR,
    limits: Optional[SolveLimits] = None,
    backend: Optional[SolverBackend] = None,
    work_dir: Optional[Path] = None,
) -> Solution:
    """Write ``m`` as an LP file, run the backend and parse its solution."""
    limits = limits or SolveLimits.from_config()
    backend = backend or get_backend()
    executable = backend.resolve_executable()
    with tempfile.TemporaryDirectory(prefix="sgc-", dir=config.solver.work_dir) as tmp:
        directory = Path(work_dir) if work_dir else Path(tmp)
        directory.mkdir(parents=True, exist_ok=True)
        model_path = directory / "model.lp"
        params_path = directory / "model.params"
        solution_path = directory / f"solution.{backend.name}.txt"
        model_path.write_text(emit_lp(m), encoding="utf-8")
        params_path.write_text(backend.params_text(limits), encoding="utf-8")
        if solution_path.exists():
            solution_path.unlink()
        cmd = backend.command(executable, model_path, params_path, solution_path, limits)
        logger.debug(f"Running {' '.join(cmd)}")
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                cmd,
                capture_output=True,
                text=True,
                timeout=limits.time_limit + config.solver.grace_seconds,
            )
        except FileNotFoundError as e:
            raise BackendNotFoundError(f"Could not start {backend.name}: {e}") from e
        except subprocess.TimeoutExpired:
            logger.warning(f"{backend.name} exceeded the wall-clock limit without returning")
            return Solution(status=SolveStatus.UNKNOWN, solve_seconds=time.perf_counter() - start, backend=backend.name)
        elapsed = time.perf_counter() - start
        logger.debug(proc.stdout)
        if not solution_path.exists():
            if proc.returncode != 0:
                raise BackendCrashError(
                    f"{backend.name} exited with code {proc.returncode} and wrote no solution: "
                    f"{proc.stderr.strip()[-500:]}"
                )
            logger.warning(f"{backend.name} finished without a solution file")
            return Solution(status=SolveStatus.UNKNOWN, solve_seconds=elapsed, backend=backend.name)
        solution = backend.parse_solution_file(solution_path.read_text(encoding="utf-8"), m)
    gap = backend.parse_gap(proc.stdout)
    if solution.status == SolveStatus.OPTIMAL:
        gap = gap if gap is not None and gap >= 0 else 0.0
    elif gap is None:
        gap = math.inf
    solution = replace(solution, mip_gap=gap, solve_seconds=elapsed)
    logger.info(
        f"{backend.name}: {solution.status.value} objective={solution.objective:.6g} "
        f"gap={solution.mip_gap:.4g} in {elapsed:.2f}s"
    )
    return solution


# --- Brute-force oracle ---
def _column_masks(g: Graph) -> List[int]:
    """Vertex subsets passing the per-cluster span and degree conditions."""
    edges = [(i, j) for i, j, _ in g.edges]
    masks = []
    for mask in range(1 << g.n):
        members = [i for i in range(g.n) if mask >> i & 1]
        inside = sum(1 for i, j in edges if mask >> i & 1 and mask >> j & 1)
        if members and inside < len(members) - 1:
            continue
        if any(not any(mask >> j & 1 for j in g.neighbors(i)) for i in members):
            continue
        masks.append(mask)
    return masks


def _pattern_feasible(columns: Tuple[int, ...], g: Graph, p: ClusterParams) -> bool:
    sizes = [bin(col).count("1") for col in columns]
    if any(sizes) and not all(sizes):
        return False
    if p.min_size_active and sum(sizes) < p.sigma * g.n - 1e-9:
        return False
    for a, b in combinations(range(len(columns)), 2):
        shared = bin(columns[a] & columns[b]).count("1")
        if shared > p.nu * sizes[a] + 1e-9 or shared > p.nu * sizes[b] + 1e-9:
            return False
    return True


def _derived_fixings(columns: Tuple[int, ...], g: Graph, p: ClusterParams) -> Dict[str, float]:
    """Every binary determined by y; only x, tau, pi (and span/time when active) stay free."""
    def y(i: int, c: int) -> int:
        return columns[c] >> i & 1

    k = len(columns)
    fix: Dict[str, float] = {}
    for i in range(g.n):
        fix[l_name(i)] = float(any(y(i, c) for c in range(k)))
        for c in range(k):
            fix[y_name(i, c)] = float(y(i, c))
        for c1, c2 in combinations(range(k), 2):
            fix[t_name(i, c1, c2)] = float(y(i, c1) and y(i, c2))
    for e, (i, j, _) in enumerate(g.edges):
        for c1, c2 in combinations(range(k), 2):
            both = y(i, c1) and y(i, c2) and y(j, c1) and y(j, c2)
            fix[eta_name(e, c1, c2)] = float(both)
        for c1 in range(k):
            for c2 in range(k):
                if c1 == c2:
                    continue
                fix[s_name(e, c1, c2)] = float(
                    y(i, c1) and y(j, c2) and not fix[eta_name(e, c1, c2)]
                )
            z = float(y(i, c1) and y(j, c1))
            fix[z_name(c1, e)] = z
            if not p.enable_time_constraints:
                fix[gam_name(c1, e)] = z
    return fix


def brute_force_oracle(
    g: Graph,
    p: ClusterParams,
    backend: Optional[SolverBackend] = None,
    limits: Optional[SolveLimits] = None,
) -> Solution:
    """Exact optimum by enumerating every cluster assignment y.

    Cluster labels are interchangeable in all constraints and both
    objectives, so only multisets of cluster columns are enumerated. Each
    surviving assignment fixes every indicator and the remaining continuous
    problem over x is solved through ``backend``. Size-ordering rows are
    left out since the enumerated columns come in no particular order.
    """
    p.validate(g.n)
    n, k = g.n, p.k
    if n * k > ORACLE_LIMIT:
        raise EnumerationLimitError(f"n*K = {n * k} exceeds the oracle bound {ORACLE_LIMIT}")
    start = time.perf_counter()
    name = backend.name if backend else ""
    if g.m == 0:
        # the degree condition forces every cluster empty
        if p.min_size_active:
            return Solution(status=SolveStatus.INFEASIBLE, backend=name)
        zeros = {(i, c): 0 for i in range(n) for c in range(k)}
        return Solution(
            status=SolveStatus.OPTIMAL,
            objective=0.0,
            y=zeros,
            x={key: 0.0 for key in zeros},
            backend=name,
        )
    backend = backend or get_backend()
    limits = limits or SolveLimits.from_config()
    base = build_model(g, replace(p, break_symmetry=False))
    maximize = base.objective.sense == "max"
    masks = sorted(_column_masks(g), reverse=True)
    best: Optional[Solution] = None
    evaluated = 0
    for columns in combinations_with_replacement(masks, k):
        if not _pattern_feasible(columns, g, p):
            continue
        evaluated += 1
        candidate = solve(base.with_fixings(_derived_fixings(columns, g, p)), limits, backend)
        if candidate.status != SolveStatus.OPTIMAL:
            continue
        if best is None:
            best = candidate
        elif maximize and candidate.objective > best.objective + 1e-9:
            best = candidate
        elif not maximize and candidate.objective < best.objective - 1e-9:
            best = candidate
    elapsed = time.perf_counter() - start
    logger.info(f"Oracle evaluated {evaluated} assignments in {elapsed:.2f}s")
    if best is None:
        return Solution(status=SolveStatus.INFEASIBLE, solve_seconds=elapsed, backend=backend.name)
    return replace(best, mip_gap=0.0, solve_seconds=elapsed)
