from unittest.mock import patch

import pytest

from sgc_core.connectivity import check_connectivity, solve_with_lazy_connectivity
from sgc_core.graph import Edge, Graph
from sgc_core.model import NOGOOD, ClusterParams, ObjectiveKind
from sgc_core.solver import CbcBackend, Solution, SolveLimits, SolveStatus
from sgc_core.utils import ParameterError
from tests.conftest import memberships, triangles


def _solution(n, k, clusters, objective=0.0, status=SolveStatus.OPTIMAL):
    y, x = memberships(n, k, clusters)
    return Solution(status=status, objective=objective, y=y, x=x)


class TestCheckConnectivity:
    """Test post-hoc connectivity of clusters"""

    def test_path_cluster_is_connected(self):
        g = Graph(n=3, edges=(Edge(0, 1, 1), Edge(1, 2, 1)))
        report = check_connectivity(g, _solution(3, 2, [{0, 1, 2}]))
        assert report.per_cluster[0].connected
        assert report.per_cluster[0].components == 1

    def test_split_cluster(self):
        g = Graph(n=5, edges=(Edge(0, 1, 1), Edge(3, 4, 1)))
        report = check_connectivity(g, _solution(5, 2, [{0, 1, 3, 4}, {2}]))
        first, second = report.per_cluster
        assert not first.connected
        assert first.components == 2
        assert second.connected
        assert report.fraction_connected == 0.5
        assert not report.all_connected

    def test_empty_clusters_excluded(self):
        report = check_connectivity(triangles(1), _solution(3, 3, [{0, 1, 2}, set(), set()]))
        assert report.nonempty_count == 1
        assert report.fraction_connected == 1.0

    def test_cluster_count_from_solution(self):
        report = check_connectivity(triangles(2), _solution(6, 2, [{0, 1, 2}, {3, 4, 5}]))
        assert len(report.per_cluster) == 2
        assert report.to_dict()["clusters"][1]["members"] == [3, 4, 5]


@pytest.fixture
def lazy_params():
    return ClusterParams(k=2, mu=0.1, delta=0.5, nu=0.5, sigma=0.5, objective=ObjectiveKind.MAX_ASSOCIATION)


class TestLazyLoop:
    """Test the no-good-cut re-optimization loop with a mocked solver"""

    @patch("sgc_core.connectivity.solve")
    def test_connected_first_optimum(self, mock_solve, lazy_params):
        g = triangles(2)
        mock_solve.return_value = _solution(6, 2, [{0, 1, 2}, {3, 4, 5}], objective=12.0)
        result = solve_with_lazy_connectivity(g, lazy_params, SolveLimits(time_limit=5), CbcBackend())
        assert result.rounds_used == 1
        assert not result.exhausted
        model = mock_solve.call_args[0][0]
        assert NOGOOD not in model.family_counts()

    @patch("sgc_core.connectivity.solve")
    def test_disconnected_then_connected(self, mock_solve, lazy_params):
        g = triangles(4)
        disconnected = _solution(12, 2, [{0, 1, 2, 3, 4, 5}, {6, 7, 8, 9, 10, 11}], objective=24.0)
        connected = _solution(12, 2, [{0, 1, 2}, {3, 4, 5}], objective=12.0)
        mock_solve.side_effect = [disconnected, connected]
        result = solve_with_lazy_connectivity(g, lazy_params, SolveLimits(time_limit=5), CbcBackend())
        assert result.rounds_used == 2
        assert result.report.all_connected
        assert [r.objective for r in result.history] == [24.0, 12.0]
        cut = next(c for c in mock_solve.call_args_list[1][0][0].constraints if c.family == NOGOOD)
        assert cut.name == "nogood_1"
        assert cut.rhs == 11.0

    @patch("sgc_core.connectivity.solve")
    def test_round_cap(self, mock_solve, lazy_params):
        g = triangles(4)
        mock_solve.return_value = _solution(12, 2, [{0, 1, 2, 3, 4, 5}, {6, 7, 8, 9, 10, 11}], objective=24.0)
        result = solve_with_lazy_connectivity(g, lazy_params, SolveLimits(time_limit=5), CbcBackend(), max_rounds=1)
        assert result.rounds_used == 1
        assert result.exhausted
        assert result.report.fraction_connected == 0.0
        assert mock_solve.call_count == 1

    @patch("sgc_core.connectivity.solve")
    def test_infeasible_stops(self, mock_solve, lazy_params):
        mock_solve.return_value = Solution(status=SolveStatus.INFEASIBLE)
        result = solve_with_lazy_connectivity(triangles(2), lazy_params, SolveLimits(time_limit=5), CbcBackend())
        assert result.rounds_used == 1
        assert result.solution.status == SolveStatus.INFEASIBLE

    def test_round_budget_must_be_positive(self, lazy_params):
        with pytest.raises(ParameterError):
            solve_with_lazy_connectivity(triangles(2), lazy_params, max_rounds=0)


@pytest.mark.integration
class TestLazyLoopWithBackend:
    """Run the lazy loop on an instance whose optima are all disconnected"""

    def test_supports_change_and_objective_degrades(self, solver_backend, lazy_params):
        # four disjoint triangles, two clusters: every association optimum pairs up triangles
        result = solve_with_lazy_connectivity(
            triangles(4), lazy_params, SolveLimits(time_limit=120), solver_backend, max_rounds=3
        )
        history = result.history
        assert history[0].objective == pytest.approx(24.0, abs=1e-6)
        assert history[0].fraction_connected < 1.0
        for before, after in zip(history, history[1:]):
            assert after.support != before.support
            assert after.objective <= before.objective + 1e-6
