"""
MILP formulation of the soft graph clustering problem.

The model is assembled into a solver-agnostic intermediate representation
(``ModelIR``) and emitted as CPLEX LP-format text, the interchange format
consumed by the solver backends. See docs/MODEL.md for the variable and
constraint census and docs/LP_FORMAT.md for the emitted text layout.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations, permutations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .graph import Graph
from .utils import ModelError, ParameterError

logger = logging.getLogger(__name__)

Term = Tuple[str, float]
Key = Tuple


class ObjectiveKind(str, Enum):
    MIN_CUT = "mincut"
    MAX_ASSOCIATION = "maxassoc"


class VarKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


# Constraint families, in build order.
MEMBERSHIP = "membership"
VERTEX_LOGIC = "vertex_logic"
BALANCE = "balance"
OVERLAP = "overlap"
INTERSECTION = "intersection"
CUT = "cut"
CUT_LINEARIZATION = "cut_linearization"
ASSOCIATION = "association"
CONNECTIVITY = "connectivity"
TIME = "time"
MIN_SIZE = "min_size"
ASSOC_BOUND = "assoc_bound"
SYMMETRY = "symmetry"
NOGOOD = "nogood"

FAMILIES = (
    MEMBERSHIP,
    VERTEX_LOGIC,
    BALANCE,
    OVERLAP,
    INTERSECTION,
    CUT,
    CUT_LINEARIZATION,
    ASSOCIATION,
    CONNECTIVITY,
    TIME,
    MIN_SIZE,
    ASSOC_BOUND,
    SYMMETRY,
    NOGOOD,
)


@dataclass(frozen=True)
class ClusterParams:
    k: int = 3
    mu: float = 0.05
    delta: float = 0.2
    nu: float = 0.5
    sigma: float = 0.7
    objective: ObjectiveKind = ObjectiveKind.MIN_CUT
    assoc_lower_bound: Optional[float] = None
    enable_time_constraints: bool = False
    enable_min_size: Optional[bool] = None
    break_symmetry: bool = False

    @property
    def min_size_active(self) -> bool:
        """Minimum total size: on for min-cut, off for max-association unless set."""
        if self.enable_min_size is not None:
            return self.enable_min_size
        return self.objective == ObjectiveKind.MIN_CUT

    def validate(self, n: Optional[int] = None):
        if self.k < 2:
            raise ParameterError(f"K must be at least 2, got {self.k}")
        if n is not None and self.k > n:
            raise ParameterError(f"K={self.k} exceeds the vertex count {n}")
        for name in ("mu", "delta", "nu", "sigma"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ParameterError(f"{name} must lie in (0, 1), got {value}")
        if self.assoc_lower_bound is not None and self.assoc_lower_bound < 0:
            raise ParameterError(
                f"association lower bound must be >= 0, got {self.assoc_lower_bound}"
            )

    def with_objective(self, objective: ObjectiveKind, **changes) -> "ClusterParams":
        return replace(self, objective=objective, **changes)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    terms: Tuple[Term, ...]
    sense: Sense
    rhs: float

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(coef * values.get(var, 0.0) for var, coef in self.terms)

    def slack(self, values: Mapping[str, float]) -> float:
        """Signed slack; negative means violated."""
        lhs = self.activity(values)
        if self.sense == Sense.LE:
            return self.rhs - lhs
        if self.sense == Sense.GE:
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: Tuple[Term, ...]

    def value(self, values: Mapping[str, float]) -> float:
        return sum(coef * values.get(var, 0.0) for var, coef in self.terms)


@dataclass(frozen=True)
class ModelIR:
    variables: Tuple[Variable, ...]
    constraints: Tuple[Constraint, ...]
    objective: Objective
    var_index: Mapping[Key, str] = field(default_factory=dict)
    n: int = 0
    k: int = 0

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ModelError("duplicate variable names in model")
        declared = set(names)
        for con in self.constraints:
            for var, _ in con.terms:
                if var not in declared:
                    raise ModelError(f"constraint {con.name} references undeclared {var}")
        for var, _ in self.objective.terms:
            if var not in declared:
                raise ModelError(f"objective references undeclared {var}")
        object.__setattr__(self, "_by_name", {v.name: v for v in self.variables})
        object.__setattr__(
            self, "_keys", {name: key for key, name in self.var_index.items()}
        )

    def variable(self, name: str) -> Variable:
        return self._by_name[name]

    def has_variable(self, name: str) -> bool:
        return name in self._by_name

    def key_of(self, name: str) -> Optional[Key]:
        return self._keys.get(name)

    def family_counts(self) -> Dict[str, int]:
        return dict(Counter(c.family for c in self.constraints))

    def kind_counts(self) -> Dict[str, int]:
        prefixes = Counter(key[0] for key in self.var_index)
        return dict(prefixes)

    def with_constraint(self, constraint: Constraint) -> "ModelIR":
        if any(c.name == constraint.name for c in self.constraints):
            raise ModelError(f"constraint name {constraint.name} already in model")
        return replace(self, constraints=self.constraints + (constraint,))

    def with_fixings(self, fixings: Mapping[str, float]) -> "ModelIR":
        """Copy with the given variables fixed (lo = hi = value)."""
        unknown = set(fixings) - set(self._by_name)
        if unknown:
            raise ModelError(f"cannot fix undeclared variables: {sorted(unknown)[:5]}")
        variables = tuple(
            replace(v, lo=fixings[v.name], hi=fixings[v.name]) if v.name in fixings else v
            for v in self.variables
        )
        return replace(self, variables=variables)

    def evaluate(self, values: Mapping[str, float]) -> Dict[str, float]:
        return {c.name: c.slack(values) for c in self.constraints}

    def objective_value(self, values: Mapping[str, float]) -> float:
        return self.objective.value(values)


# --- Variable naming ---
def y_name(i: int, c: int) -> str:
    return f"y_{i}_{c}"


def x_name(i: int, c: int) -> str:
    return f"x_{i}_{c}"


def l_name(i: int) -> str:
    return f"L_{i}"


def t_name(i: int, c1: int, c2: int) -> str:
    a, b = min(c1, c2), max(c1, c2)
    return f"t_{i}_{a}_{b}"


def eta_name(e: int, c1: int, c2: int) -> str:
    a, b = min(c1, c2), max(c1, c2)
    return f"eta_{e}_{a}_{b}"


def s_name(e: int, c1: int, c2: int) -> str:
    return f"s_{e}_{c1}_{c2}"


def taui_name(e: int, c1: int, c2: int) -> str:
    return f"taui_{e}_{c1}_{c2}"


def tauj_name(e: int, c1: int, c2: int) -> str:
    return f"tauj_{e}_{c1}_{c2}"


def z_name(c: int, e: int) -> str:
    return f"z_{c}_{e}"


def pii_name(c: int, e: int) -> str:
    return f"pii_{c}_{e}"


def pij_name(c: int, e: int) -> str:
    return f"pij_{c}_{e}"


def gam_name(c: int, e: int) -> str:
    return f"gam_{c}_{e}"


def tt_name(i: int) -> str:
    return f"tt_{i}"


class _ModelBuilder:
    def __init__(self):
        self.variables: List[Variable] = []
        self.var_index: Dict[Key, str] = {}
        self.constraints: List[Constraint] = []

    def var(self, key: Key, name: str, kind: VarKind, lo: float = 0.0, hi: float = 1.0):
        self.variables.append(Variable(name, kind, lo, hi))
        self.var_index[key] = name

    def add(self, name: str, family: str, terms: Iterable[Term], sense: Sense, rhs: float):
        merged: Dict[str, float] = {}
        for var, coef in terms:
            merged[var] = merged.get(var, 0.0) + coef
        cleaned = tuple((v, c) for v, c in merged.items() if c != 0.0)
        self.constraints.append(Constraint(name, family, cleaned, sense, float(rhs)))


def _cut_terms(g: Graph, k: int) -> List[Term]:
    terms = []
    for c1, c2 in permutations(range(k), 2):
        for e, (_, _, w) in enumerate(g.edges):
            terms.append((taui_name(e, c1, c2), float(w)))
            terms.append((tauj_name(e, c1, c2), float(w)))
    return terms


def _association_terms(g: Graph, k: int) -> List[Term]:
    terms = []
    for c in range(k):
        for e, (_, _, w) in enumerate(g.edges):
            terms.append((pii_name(c, e), float(w)))
            terms.append((pij_name(c, e), float(w)))
    return terms


def build_model(g: Graph, p: ClusterParams) -> ModelIR:
    """Assemble the full MILP for graph ``g`` under parameters ``p``."""
    p.validate(g.n)
    if g.m == 0:
        raise ModelError("the model needs a graph with at least one edge")
    n, k = g.n, p.k
    V, C = range(n), range(k)
    ordered = list(permutations(C, 2))
    unordered = list(combinations(C, 2))
    b = _ModelBuilder()

    B, R = VarKind.BINARY, VarKind.CONTINUOUS
    for i in V:
        for c in C:
            b.var(("y", i, c), y_name(i, c), B)
    for i in V:
        for c in C:
            b.var(("x", i, c), x_name(i, c), R)
    for i in V:
        b.var(("L", i), l_name(i), B)
    for i in V:
        for c1, c2 in unordered:
            b.var(("t", i, c1, c2), t_name(i, c1, c2), B)
    for e in range(g.m):
        for c1, c2 in unordered:
            b.var(("eta", e, c1, c2), eta_name(e, c1, c2), B)
    for e in range(g.m):
        for c1, c2 in ordered:
            b.var(("s", e, c1, c2), s_name(e, c1, c2), B)
            b.var(("taui", e, c1, c2), taui_name(e, c1, c2), R)
            b.var(("tauj", e, c1, c2), tauj_name(e, c1, c2), R)
    for c in C:
        for e in range(g.m):
            b.var(("z", c, e), z_name(c, e), B)
            b.var(("pii", c, e), pii_name(c, e), R)
            b.var(("pij", c, e), pij_name(c, e), R)
            b.var(("gam", c, e), gam_name(c, e), B)
    if p.enable_time_constraints:
        for i in V:
            b.var(("tt", i), tt_name(i), R, 0.0, float(n))

    LE, EQ, GE = Sense.LE, Sense.EQ, Sense.GE

    # membership value only on assigned pairs, at least mu
    for i in V:
        for c in C:
            b.add(f"memb_ub_{i}_{c}", MEMBERSHIP, [(x_name(i, c), 1), (y_name(i, c), -1)], LE, 0)
            b.add(f"memb_lb_{i}_{c}", MEMBERSHIP, [(x_name(i, c), 1), (y_name(i, c), -p.mu)], GE, 0)

    # a vertex's memberships sum to 1 iff it is in some cluster
    for i in V:
        for c in C:
            b.add(f"in_any_{i}_{c}", VERTEX_LOGIC, [(y_name(i, c), 1), (l_name(i), -1)], LE, 0)
        b.add(
            f"any_ub_{i}",
            VERTEX_LOGIC,
            [(l_name(i), 1)] + [(y_name(i, c), -1) for c in C],
            LE,
            0,
        )
        b.add(
            f"msum_{i}",
            VERTEX_LOGIC,
            [(x_name(i, c), 1) for c in C] + [(l_name(i), -1)],
            EQ,
            0,
        )

    # equal balance, every ordered pair
    for c1, c2 in ordered:
        lo = [(x_name(i, c1), 1 - p.delta) for i in V] + [(x_name(i, c2), -1) for i in V]
        hi = [(x_name(i, c2), 1) for i in V] + [(x_name(i, c1), -(1 + p.delta)) for i in V]
        b.add(f"bal_lo_{c1}_{c2}", BALANCE, lo, LE, 0)
        b.add(f"bal_hi_{c1}_{c2}", BALANCE, hi, LE, 0)

    # overlap indicators and cardinality
    for c1, c2 in unordered:
        for i in V:
            t = t_name(i, c1, c2)
            b.add(f"ovl_both_{i}_{c1}_{c2}", OVERLAP, [(y_name(i, c1), 1), (y_name(i, c2), 1), (t, -1)], LE, 1)
            b.add(f"ovl_a_{i}_{c1}_{c2}", OVERLAP, [(t, 1), (y_name(i, c1), -1)], LE, 0)
            b.add(f"ovl_b_{i}_{c1}_{c2}", OVERLAP, [(t, 1), (y_name(i, c2), -1)], LE, 0)
        ts = [(t_name(i, c1, c2), 1) for i in V]
        b.add(f"ovl_cap_a_{c1}_{c2}", OVERLAP, ts + [(y_name(i, c1), -p.nu) for i in V], LE, 0)
        b.add(f"ovl_cap_b_{c1}_{c2}", OVERLAP, ts + [(y_name(i, c2), -p.nu) for i in V], LE, 0)

    # both endpoints in the intersection
    for e, (i, j, _) in enumerate(g.edges):
        for c1, c2 in unordered:
            eta, ti, tj = eta_name(e, c1, c2), t_name(i, c1, c2), t_name(j, c1, c2)
            b.add(f"isect_both_{e}_{c1}_{c2}", INTERSECTION, [(ti, 1), (tj, 1), (eta, -1)], LE, 1)
            b.add(f"isect_i_{e}_{c1}_{c2}", INTERSECTION, [(eta, 1), (ti, -1)], LE, 0)
            b.add(f"isect_j_{e}_{c1}_{c2}", INTERSECTION, [(eta, 1), (tj, -1)], LE, 0)

    # cut indicators; s <= a_ij holds since only edges get an s
    for e, (i, j, _) in enumerate(g.edges):
        for c1, c2 in ordered:
            s, eta = s_name(e, c1, c2), eta_name(e, c1, c2)
            yi, yj = y_name(i, c1), y_name(j, c2)
            b.add(f"cut_on_{e}_{c1}_{c2}", CUT, [(yi, 1), (yj, 1), (eta, -1), (s, -1)], LE, 1)
            b.add(f"cut_i_{e}_{c1}_{c2}", CUT, [(s, 1), (yi, -1)], LE, 0)
            b.add(f"cut_j_{e}_{c1}_{c2}", CUT, [(s, 1), (yj, -1)], LE, 0)
            b.add(f"cut_isect_{e}_{c1}_{c2}", CUT, [(s, 1), (eta, 1)], LE, 1)

    # tau = x * s
    for e, (i, j, _) in enumerate(g.edges):
        for c1, c2 in ordered:
            s = s_name(e, c1, c2)
            for tag, tau, x in (
                ("taui", taui_name(e, c1, c2), x_name(i, c1)),
                ("tauj", tauj_name(e, c1, c2), x_name(j, c2)),
            ):
                b.add(f"{tag}_x_{e}_{c1}_{c2}", CUT_LINEARIZATION, [(tau, 1), (x, -1)], LE, 0)
                b.add(f"{tag}_s_{e}_{c1}_{c2}", CUT_LINEARIZATION, [(tau, 1), (s, -1)], LE, 0)
                b.add(f"{tag}_lb_{e}_{c1}_{c2}", CUT_LINEARIZATION, [(tau, 1), (s, -1), (x, -1)], GE, -1)

    # association indicators; pi = x * z
    for c in C:
        for e, (i, j, _) in enumerate(g.edges):
            z, yi, yj = z_name(c, e), y_name(i, c), y_name(j, c)
            b.add(f"asc_on_{c}_{e}", ASSOCIATION, [(yi, 1), (yj, 1), (z, -1)], LE, 1)
            b.add(f"asc_i_{c}_{e}", ASSOCIATION, [(z, 1), (yi, -1)], LE, 0)
            b.add(f"asc_j_{c}_{e}", ASSOCIATION, [(z, 1), (yj, -1)], LE, 0)
            for tag, pi, x in (
                ("pii", pii_name(c, e), x_name(i, c)),
                ("pij", pij_name(c, e), x_name(j, c)),
            ):
                b.add(f"{tag}_x_{c}_{e}", ASSOCIATION, [(pi, 1), (x, -1)], LE, 0)
                b.add(f"{tag}_z_{c}_{e}", ASSOCIATION, [(pi, 1), (z, -1)], LE, 0)
                b.add(f"{tag}_lb_{c}_{e}", ASSOCIATION, [(pi, 1), (z, -1), (x, -1)], GE, -1)

    # span variables, edge count and degree conditions
    for c in C:
        for e, (i, j, _) in enumerate(g.edges):
            gam = gam_name(c, e)
            b.add(f"span_i_{c}_{e}", CONNECTIVITY, [(gam, 1), (y_name(i, c), -1)], LE, 0)
            b.add(f"span_j_{c}_{e}", CONNECTIVITY, [(gam, 1), (y_name(j, c), -1)], LE, 0)
        b.add(
            f"span_count_{c}",
            CONNECTIVITY,
            [(y_name(i, c), 1) for i in V] + [(gam_name(c, e), -1) for e in range(g.m)],
            LE,
            1,
        )
    for i in V:
        incident = g.incident_edges(i)
        for c in C:
            b.add(
                f"degree_{i}_{c}",
                CONNECTIVITY,
                [(y_name(i, c), 1)] + [(z_name(c, e), -1) for e in incident],
                LE,
                0,
            )

    # arrival-time constraints on span edges, oriented i -> j for i < j
    if p.enable_time_constraints:
        for c in C:
            for e, (i, j, _) in enumerate(g.edges):
                gam, ti, tj = gam_name(c, e), tt_name(i), tt_name(j)
                b.add(f"time_lo_{c}_{e}", TIME, [(tj, 1), (ti, -1), (gam, -(n + 1))], GE, -n)
                b.add(f"time_hi_{c}_{e}", TIME, [(tj, 1), (ti, -1), (gam, n)], LE, 1 + n)

    if p.min_size_active:
        b.add(
            "min_size",
            MIN_SIZE,
            [(y_name(i, c), 1) for i in V for c in C],
            GE,
            p.sigma * n,
        )

    if p.assoc_lower_bound is not None:
        b.add("assoc_lb", ASSOC_BOUND, _association_terms(g, k), GE, p.assoc_lower_bound)

    # clusters ordered by size; any solution relabels into this order
    if p.break_symmetry:
        for c in range(k - 1):
            b.add(
                f"sym_{c}",
                SYMMETRY,
                [(y_name(i, c), 1) for i in V] + [(y_name(i, c + 1), -1) for i in V],
                GE,
                0,
            )

    if p.objective == ObjectiveKind.MIN_CUT:
        objective = Objective("min", tuple(_cut_terms(g, k)))
    else:
        objective = Objective("max", tuple(_association_terms(g, k)))

    model = ModelIR(
        variables=tuple(b.variables),
        constraints=tuple(b.constraints),
        objective=objective,
        var_index=b.var_index,
        n=n,
        k=k,
    )
    logger.info(
        f"Built {p.objective.value} model: {len(model.variables)} variables, "
        f"{len(model.constraints)} constraints (n={n}, m={g.m}, K={k})"
    )
    return model


def census(n: int, m: int, p: ClusterParams) -> Dict[str, Dict[str, int]]:
    """Closed-form variable and constraint counts of ``build_model``."""
    k = p.k
    pairs = k * (k - 1)
    upairs = pairs // 2
    variables = {
        "y": n * k,
        "x": n * k,
        "L": n,
        "t": n * upairs,
        "eta": m * upairs,
        "s": m * pairs,
        "taui": m * pairs,
        "tauj": m * pairs,
        "z": m * k,
        "pii": m * k,
        "pij": m * k,
        "gam": m * k,
    }
    if p.enable_time_constraints:
        variables["tt"] = n
    constraints = {
        MEMBERSHIP: 2 * n * k,
        VERTEX_LOGIC: n * k + 2 * n,
        BALANCE: 2 * pairs,
        OVERLAP: 3 * n * upairs + 2 * upairs,
        INTERSECTION: 3 * m * upairs,
        CUT: 4 * m * pairs,
        CUT_LINEARIZATION: 6 * m * pairs,
        ASSOCIATION: 9 * m * k,
        CONNECTIVITY: 2 * m * k + k + n * k,
    }
    if p.enable_time_constraints:
        constraints[TIME] = 2 * m * k
    if p.min_size_active:
        constraints[MIN_SIZE] = 1
    if p.assoc_lower_bound is not None:
        constraints[ASSOC_BOUND] = 1
    if p.break_symmetry:
        constraints[SYMMETRY] = k - 1
    return {"variables": variables, "constraints": constraints}


def nogood_cut(active: Set[Tuple[int, int]], name: str = "nogood") -> Constraint:
    """sum_{(i,c) in active} y_ic <= |active| - 1."""
    if not active:
        raise ModelError("a no-good cut needs at least one active variable")
    terms = tuple((y_name(i, c), 1.0) for i, c in sorted(active))
    return Constraint(name, NOGOOD, terms, Sense.LE, float(len(active) - 1))


# --- LP emission ---
_LINE_WIDTH = 78


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return format(value, ".12g")


def _expression(terms: Sequence[Term]) -> List[str]:
    tokens = []
    for k, (var, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        tokens.append(body if k == 0 and sign == "+" else f"{sign} {body}")
    return tokens


def _wrap(head: str, tokens: Sequence[str]) -> List[str]:
    lines, current = [], head
    for tok in tokens:
        if len(current) + 1 + len(tok) > _LINE_WIDTH and current.strip():
            lines.append(current)
            current = "   " + tok
        else:
            current = f"{current} {tok}" if current else tok
    lines.append(current)
    return lines


def emit_lp(m: ModelIR) -> str:
    """Deterministic CPLEX LP-format text for ``m``."""
    out = ["\\ soft graph clustering model"]
    out.append("Minimize" if m.objective.sense == "min" else "Maximize")
    if m.objective.terms:
        out.extend(_wrap(" obj:", _expression(m.objective.terms)))
    else:
        out.append(f" obj: 0 {m.variables[0].name}")
    out.append("Subject To")
    for con in m.constraints:
        tokens = _expression(con.terms) + [con.sense.value, _num(con.rhs)]
        out.extend(_wrap(f" {con.name}:", tokens))
    out.append("Bounds")
    for var in m.variables:
        if var.lo == var.hi:
            out.append(f" {var.name} = {_num(var.lo)}")
        else:
            out.append(f" {_num(var.lo)} <= {var.name} <= {_num(var.hi)}")
    out.append("Binaries")
    for var in m.variables:
        if var.kind == VarKind.BINARY:
            out.append(f" {var.name}")
    out.append("End")
    return "\n".join(out) + "\n"
