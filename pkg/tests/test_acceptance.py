"""
End-to-end checks against a real solver executable. Skipped when no backend
is installed; slow because the oracle runs one LP per enumerated assignment.
"""

from dataclasses import replace
from itertools import combinations

import pytest

from sgc_core.analysis import epsilon_sweep, validate_solution
from sgc_core.graph import Edge, GeneratorConfig, Graph, generate_random, transform_unit_weights
from sgc_core.model import ClusterParams, ObjectiveKind, build_model
from sgc_core.solver import SolveLimits, SolveStatus, brute_force_oracle, solve

pytestmark = [pytest.mark.integration, pytest.mark.slow]

ORACLE_PARAMS = ClusterParams(k=2, mu=0.1, delta=0.5, nu=0.5, sigma=0.5)
LIMITS = SolveLimits(time_limit=600)


def _barbell() -> Graph:
    edges = [Edge(i, j, 1) for i, j in combinations(range(4), 2)]
    edges += [Edge(i, j, 1) for i, j in combinations(range(4, 8), 2)]
    edges.append(Edge(3, 4, 1))
    return Graph(n=8, edges=tuple(edges))


ORACLE_CASES = [
    (GeneratorConfig(n, 0.6, 10, seed), kind)
    for n in (4, 5, 6)
    for seed in (1, 2, 3, 4)
    for kind in (ObjectiveKind.MIN_CUT, ObjectiveKind.MAX_ASSOCIATION)
]


class TestOracleEquivalence:
    """The backend optimum matches exhaustive enumeration"""

    @pytest.mark.parametrize("cfg, kind", ORACLE_CASES, ids=lambda v: getattr(v, "value", None) or f"n{v.n}s{v.seed}")
    def test_random_instances(self, solver_backend, cfg, kind):
        g = generate_random(cfg)
        p = ORACLE_PARAMS.with_objective(kind)
        oracle = brute_force_oracle(g, p, solver_backend, LIMITS)
        for q in (p, replace(p, break_symmetry=True)):
            direct = solve(build_model(g, q), LIMITS, solver_backend)
            assert direct.status == oracle.status
            if oracle.status == SolveStatus.OPTIMAL:
                assert abs(direct.objective - oracle.objective) <= 1e-6 * max(1.0, abs(oracle.objective))
                assert validate_solution(g, q, direct).valid


class TestTransformation:
    """Reweighting separates the two halves of a barbell"""

    def test_barbell_halves_separate(self, solver_backend):
        g = transform_unit_weights(_barbell())
        p = ClusterParams(k=2, mu=0.1, delta=0.5, nu=0.5, sigma=0.7)
        direct = solve(build_model(g, p), LIMITS, solver_backend)
        assert direct.status == SolveStatus.OPTIMAL
        report = validate_solution(g, p, direct)
        assert report.valid
        assert report.total_cut == pytest.approx(0.0, abs=1e-6)

        halves = [frozenset(range(4)), frozenset(range(4, 8))]
        sides = []
        for members in direct.clusters(2):
            side = [h for h in halves if members <= h]
            assert len(side) == 1
            sides.append(side[0])
        assert sides[0] != sides[1]

        oracle = brute_force_oracle(g, p, solver_backend, LIMITS)
        assert oracle.objective == pytest.approx(direct.objective, abs=1e-6)


class TestTractability:
    """Small generated classes solve to proven optimality"""

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_n15_class(self, solver_backend, seed):
        g = generate_random(GeneratorConfig(15, 0.15, 50, seed))
        p = ClusterParams(k=3, mu=0.1, delta=0.5, nu=0.5, sigma=0.7, break_symmetry=True)
        s = solve(build_model(g, p), LIMITS, solver_backend)
        assert s.status == SolveStatus.OPTIMAL
        assert validate_solution(g, p, s).valid

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_min_cut_ratio_not_above_max_association(self, solver_backend, seed):
        g = transform_unit_weights(generate_random(GeneratorConfig(10, 0.3, 1, seed)))
        p = ClusterParams(k=2, mu=0.1, delta=0.5, nu=0.5, sigma=0.5, enable_min_size=True)
        ratios = {}
        for kind in (ObjectiveKind.MIN_CUT, ObjectiveKind.MAX_ASSOCIATION):
            q = p.with_objective(kind)
            s = solve(build_model(g, q), LIMITS, solver_backend)
            if s.status != SolveStatus.OPTIMAL:
                pytest.skip(f"{kind.value} not solved to optimality")
            ratios[kind] = validate_solution(g, q, s).ratio_r
        assert ratios[ObjectiveKind.MIN_CUT] <= ratios[ObjectiveKind.MAX_ASSOCIATION] + 1e-9


class TestSweepProperties:
    """The trade-off curve is monotone and ends at the association optimum"""

    def test_n15_sweep(self, solver_backend):
        g = generate_random(GeneratorConfig(15, 0.25, 50, 1))
        rows = epsilon_sweep(g, ORACLE_PARAMS, LIMITS, solver_backend, steps=4)
        assert len(rows) == 6
        cuts = [r.total_cut for r in rows[:-1] if r.status == "optimal"]
        assert all(b >= a - 1e-6 for a, b in zip(cuts, cuts[1:]))
        assert rows[-1].total_assoc == pytest.approx(rows[-1].objective, abs=1e-6)
