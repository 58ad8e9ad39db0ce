import pytest

from sgc_core.graph import (
    Edge,
    GeneratorConfig,
    Graph,
    connected_components,
    dump_edge_list,
    generate_random,
    induced_components,
    load_edge_list,
    transform_unit_weights,
)
from sgc_core.utils import GraphFormatError, ParameterError
from tests.conftest import triangles


class TestGraph:
    """Test graph construction and queries"""

    def test_edges_are_normalized_and_sorted(self):
        g = Graph(n=4, edges=(Edge(3, 2, 5), Edge(1, 0, 2)))
        assert g.edges == (Edge(0, 1, 2), Edge(2, 3, 5))
        assert g.weight(3, 2) == 5
        assert g.adjacent(1, 0) == 1
        assert g.adjacent(0, 3) == 0

    def test_neighbors_and_incident_edges(self):
        g = triangles(1)
        assert g.neighbors(0) == {1, 2}
        assert g.incident_edges(2) == [1, 2]

    def test_isolated_vertices(self):
        g = Graph(n=3)
        assert g.m == 0
        assert g.neighbors(2) == frozenset()
        assert g.max_weight() == 0

    @pytest.mark.parametrize(
        "edges",
        [
            (Edge(1, 1, 1),),
            (Edge(0, 5, 1),),
            (Edge(0, 1, 1), Edge(1, 0, 2)),
            (Edge(0, 1, -1),),
        ],
    )
    def test_invalid_edges_rejected(self, edges):
        with pytest.raises(GraphFormatError):
            Graph(n=3, edges=edges)

    def test_components(self):
        g = triangles(2)
        assert connected_components(g) == [frozenset({0, 1, 2}), frozenset({3, 4, 5})]
        assert induced_components(g, {0, 1, 3, 4}) == [frozenset({0, 1}), frozenset({3, 4})]

    def test_to_networkx_keeps_weights(self):
        nxg = Graph(n=3, edges=(Edge(0, 1, 4),)).to_networkx()
        assert nxg.number_of_nodes() == 3
        assert nxg[0][1]["weight"] == 4


class TestEdgeListFormat:
    """Test edge-list parsing"""

    def test_parse_with_comments_and_default_weight(self):
        g = load_edge_list("# header\n0 1 5\n\n1 2\n")
        assert g.n == 3
        assert g.edges == (Edge(0, 1, 5), Edge(1, 2, 1))

    def test_parse_bytes_with_bom(self):
        g = load_edge_list("\ufeff0 3 2\n".encode("utf-8"))
        assert g.n == 4
        assert g.weight(0, 3) == 2

    def test_invalid_utf8(self):
        with pytest.raises(GraphFormatError) as exc:
            load_edge_list(b"0 1 5\n1 2 \xff\xfe\n")
        assert str(exc.value) == "input is not valid UTF-8"
        assert exc.value.line is None

    @pytest.mark.parametrize(
        "text, line",
        [
            ("0 1\n2 2\n", 2),
            ("0 1\n1 0\n", 2),
            ("0 1 -3\n", 1),
            ("0 1 x\n", 1),
            ("# c\n0 1 2 3\n", 2),
            ("-1 2\n", 1),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(GraphFormatError) as exc:
            load_edge_list(text)
        assert exc.value.line == line
        assert str(exc.value).startswith(f"line {line}:")

    def test_dump_then_load(self):
        g = triangles(2, weight=3)
        text = dump_edge_list(g)
        assert text.startswith("# n=6 m=6\n")
        assert load_edge_list(text) == g


class TestGenerator:
    """Test the random instance generator"""

    def test_edge_count_and_weights(self):
        cfg = GeneratorConfig(n=15, density=0.15, max_weight=50, seed=1)
        g = generate_random(cfg)
        assert g.n == 15
        assert g.m == 16
        assert all(1 <= e.w <= 50 for e in g.edges)

    def test_same_seed_same_instance(self):
        cfg = GeneratorConfig(n=20, density=0.25, max_weight=50, seed=7)
        assert dump_edge_list(generate_random(cfg)) == dump_edge_list(generate_random(cfg))

    def test_different_seed_different_instance(self):
        a = generate_random(GeneratorConfig(20, 0.25, 50, seed=1))
        b = generate_random(GeneratorConfig(20, 0.25, 50, seed=2))
        assert a.edges != b.edges

    @pytest.mark.parametrize(
        "density, expected",
        [(0.15, "N15d015M50"), (0.5, "N15d05M50"), (0.25, "N15d025M50")],
    )
    def test_class_name(self, density, expected):
        assert GeneratorConfig(15, density, 50).class_name == expected

    @pytest.mark.parametrize(
        "cfg",
        [
            GeneratorConfig(15, 1.1, 50),
            GeneratorConfig(15, 0.0, 50),
            GeneratorConfig(1, 0.5, 50),
            GeneratorConfig(15, 0.5, 0),
            GeneratorConfig(15, 0.5, 50, seed=-1),
            GeneratorConfig(3, 0.1, 50),
        ],
    )
    def test_invalid_configs(self, cfg):
        with pytest.raises(ParameterError):
            generate_random(cfg)


class TestWeightTransformation:
    """Test the common-neighbour reweighting of unit graphs"""

    def test_triangle_edges_get_weight_two(self):
        g = transform_unit_weights(triangles(1))
        assert [e.w for e in g.edges] == [2, 2, 2]

    def test_bridge_without_common_neighbours(self):
        g = Graph(n=4, edges=(Edge(0, 1, 1), Edge(0, 2, 1), Edge(1, 2, 1), Edge(2, 3, 1)))
        weights = {(e.i, e.j): e.w for e in transform_unit_weights(g).edges}
        assert weights[(2, 3)] == 1
        assert weights[(0, 1)] == 2
