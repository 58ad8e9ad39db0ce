from typing import Dict, Mapping, Tuple

import pytest

from sgc_core.graph import Edge, Graph
from sgc_core.model import (
    ClusterParams,
    eta_name,
    gam_name,
    l_name,
    pii_name,
    pij_name,
    s_name,
    t_name,
    taui_name,
    tauj_name,
    tt_name,
    x_name,
    y_name,
    z_name,
)
from sgc_core.solver import Solution, SolveStatus, get_backend


def triangles(count: int, weight: int = 1) -> Graph:
    edges = []
    for t in range(count):
        a = 3 * t
        edges += [Edge(a, a + 1, weight), Edge(a, a + 2, weight), Edge(a + 1, a + 2, weight)]
    return Graph(n=3 * count, edges=tuple(edges))


def memberships(n: int, k: int, clusters) -> Tuple[Dict, Dict]:
    """y and x for disjoint clusters with full membership."""
    y = {(i, c): 0 for i in range(n) for c in range(k)}
    x = {(i, c): 0.0 for i in range(n) for c in range(k)}
    for c, members in enumerate(clusters):
        for i in members:
            y[(i, c)] = 1
            x[(i, c)] = 1.0
    return y, x


def consistent_values(
    g: Graph, p: ClusterParams, y: Mapping, x: Mapping
) -> Dict[str, float]:
    """Every model variable derived from y and x; span edges join consecutive members."""
    k = p.k
    members = [sorted(i for i in range(g.n) if y[(i, c)]) for c in range(k)]
    v: Dict[str, float] = {}
    for i in range(g.n):
        v[l_name(i)] = float(any(y[(i, c)] for c in range(k)))
        for c in range(k):
            v[y_name(i, c)] = float(y[(i, c)])
            v[x_name(i, c)] = x[(i, c)]
            for c2 in range(c + 1, k):
                v[t_name(i, c, c2)] = float(y[(i, c)] and y[(i, c2)])
    for e, (i, j, _) in enumerate(g.edges):
        for c1 in range(k):
            for c2 in range(k):
                if c1 == c2:
                    continue
                eta = float(v[t_name(i, c1, c2)] and v[t_name(j, c1, c2)])
                v[eta_name(e, c1, c2)] = eta
                s = float(y[(i, c1)] and y[(j, c2)] and not eta)
                v[s_name(e, c1, c2)] = s
                v[taui_name(e, c1, c2)] = x[(i, c1)] * s
                v[tauj_name(e, c1, c2)] = x[(j, c2)] * s
            z = float(y[(i, c1)] and y[(j, c1)])
            v[z_name(c1, e)] = z
            v[pii_name(c1, e)] = x[(i, c1)] * z
            v[pij_name(c1, e)] = x[(j, c1)] * z
            consecutive = z and members[c1].index(j) == members[c1].index(i) + 1
            v[gam_name(c1, e)] = float(consecutive)
    if p.enable_time_constraints:
        for i in range(g.n):
            rank = next((m.index(i) for m in members if i in m), 0)
            v[tt_name(i)] = float(rank)
    return v


@pytest.fixture
def two_triangles() -> Graph:
    return triangles(2)


@pytest.fixture
def single_edge() -> Graph:
    return Graph(n=2, edges=(Edge(0, 1, 7),))


@pytest.fixture
def small_params() -> ClusterParams:
    return ClusterParams(k=2, mu=0.1, delta=0.5, nu=0.5, sigma=0.5)


@pytest.fixture
def triangle_solution(two_triangles, small_params) -> Solution:
    """Two unit triangles clustered as themselves, with every raw value."""
    y, x = memberships(6, 2, [{0, 1, 2}, {3, 4, 5}])
    values = consistent_values(two_triangles, small_params, y, x)
    return Solution(status=SolveStatus.OPTIMAL, objective=0.0, y=y, x=x, values=values)


@pytest.fixture
def solver_backend():
    backend = get_backend()
    if not backend.available():
        pytest.skip(f"{backend.name} executable not available")
    return backend
