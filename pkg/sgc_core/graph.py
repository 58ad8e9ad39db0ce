"""
Graph representation, edge-list ingestion, the random instance generator and
the common-neighbour weight transformation for unit-weight graphs.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Tuple, Union

import networkx as nx
import numpy as np

from .utils import GraphFormatError, ParameterError

logger = logging.getLogger(__name__)


class Edge(NamedTuple):
    i: int
    j: int
    w: int


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices 0..n-1 with non-negative integer weights.

    Edges are kept sorted by (i, j) with i < j; an edge's position in
    ``edges`` is the index used in model variable names.
    """

    n: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError(f"vertex count must be non-negative, got {self.n}")
        normalized = []
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise GraphFormatError(f"self-loop on vertex {i}")
            if i > j:
                i, j = j, i
            if i < 0 or j >= self.n:
                raise GraphFormatError(f"edge ({i},{j}) outside 0..{self.n - 1}")
            if (i, j) in seen:
                raise GraphFormatError(f"duplicate edge ({i},{j})")
            if int(w) != w or w < 0:
                raise GraphFormatError(f"weight of ({i},{j}) must be a non-negative integer")
            seen.add((i, j))
            normalized.append(Edge(int(i), int(j), int(w)))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def _weights(self) -> Dict[Tuple[int, int], int]:
        return {(e.i, e.j): e.w for e in self.edges}

    @cached_property
    def _neighbors(self) -> Tuple[FrozenSet[int], ...]:
        adjacency: List[set] = [set() for _ in range(self.n)]
        for i, j, _ in self.edges:
            adjacency[i].add(j)
            adjacency[j].add(i)
        return tuple(frozenset(a) for a in adjacency)

    def adjacent(self, i: int, j: int) -> int:
        """a_ij in {0, 1}."""
        return int((min(i, j), max(i, j)) in self._weights)

    def weight(self, i: int, j: int) -> int:
        return self._weights.get((min(i, j), max(i, j)), 0)

    def neighbors(self, i: int) -> FrozenSet[int]:
        return self._neighbors[i]

    def incident_edges(self, i: int) -> List[int]:
        return [k for k, e in enumerate(self.edges) if i in (e.i, e.j)]

    def max_weight(self) -> int:
        return max((e.w for e in self.edges), default=0)

    def total_weight(self) -> int:
        return sum(e.w for e in self.edges)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    density: float
    max_weight: int
    seed: int = 0

    @property
    def edge_count(self) -> int:
        return int(round(self.density * self.n * (self.n - 1) / 2))

    @property
    def class_name(self) -> str:
        """Instance class label, e.g. N15d015M50."""
        density = f"{self.density:g}".replace(".", "")
        return f"N{self.n}d{density}M{self.max_weight}"

    def validate(self):
        if self.n < 2:
            raise ParameterError(f"generator needs at least 2 vertices, got {self.n}")
        if not 0 < self.density <= 1:
            raise ParameterError(f"density must lie in (0, 1], got {self.density}")
        if self.max_weight < 1:
            raise ParameterError(f"max weight must be >= 1, got {self.max_weight}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.density * self.n * (self.n - 1) / 2 < 1:
            raise ParameterError("density requests fewer than one edge")


def load_edge_list(text: Union[bytes, str]) -> Graph:
    """Parse "i j [w]" lines; '#' starts a comment line; weight defaults to 1."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8-sig")
        except UnicodeDecodeError:
            raise GraphFormatError("input is not valid UTF-8") from None
    edges: List[Edge] = []
    seen: Dict[Tuple[int, int], int] = {}
    max_vertex = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise GraphFormatError(f"expected 'i j [w]', got {raw!r}", lineno)
        try:
            values = [int(tok) for tok in tokens]
        except ValueError:
            raise GraphFormatError(f"non-integer field in {raw!r}", lineno) from None
        i, j = values[0], values[1]
        w = values[2] if len(values) == 3 else 1
        if i < 0 or j < 0:
            raise GraphFormatError("vertex ids must be non-negative", lineno)
        if i == j:
            raise GraphFormatError(f"self-loop on vertex {i}", lineno)
        if w < 0:
            raise GraphFormatError(f"negative weight {w}", lineno)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphFormatError(
                f"duplicate edge {key} (first seen at line {seen[key]})", lineno
            )
        seen[key] = lineno
        edges.append(Edge(key[0], key[1], w))
        max_vertex = max(max_vertex, i, j)
    graph = Graph(n=max_vertex + 1, edges=tuple(edges))
    logger.debug(f"Loaded edge list with n={graph.n}, m={graph.m}")
    return graph


def dump_edge_list(g: Graph) -> str:
    lines = [f"# n={g.n} m={g.m}"]
    lines.extend(f"{i} {j} {w}" for i, j, w in g.edges)
    return "\n".join(lines) + "\n"


def generate_random(cfg: GeneratorConfig) -> Graph:
    """Uniform random instance.

    Algorithm (fixed for reproducibility): a PCG64 generator seeded with
    ``cfg.seed`` draws ``m`` distinct indices into the lexicographic list of
    unordered pairs (``Generator.choice`` without replacement), the indices are
    sorted, then ``m`` weights are drawn uniformly from [1, max_weight] in
    sorted-edge order.
    """
    cfg.validate()
    pairs = list(itertools.combinations(range(cfg.n), 2))
    m = cfg.edge_count
    if m > len(pairs):
        raise ParameterError(f"density {cfg.density} asks for {m} > {len(pairs)} edges")
    rng = np.random.default_rng(cfg.seed)
    chosen = np.sort(rng.choice(len(pairs), size=m, replace=False))
    weights = rng.integers(1, cfg.max_weight, size=m, endpoint=True)
    edges = tuple(
        Edge(pairs[k][0], pairs[k][1], int(w)) for k, w in zip(chosen, weights)
    )
    logger.info(f"Generated {cfg.class_name} seed={cfg.seed}: {m} edges")
    return Graph(n=cfg.n, edges=edges)


def transform_unit_weights(g: Graph) -> Graph:
    """w'_e = 1 + number of common neighbours of the endpoints of e."""
    edges = tuple(
        Edge(i, j, 1 + len(g.neighbors(i) & g.neighbors(j))) for i, j, _ in g.edges
    )
    return Graph(n=g.n, edges=edges)


def connected_components(g: Graph) -> List[FrozenSet[int]]:
    components = (frozenset(c) for c in nx.connected_components(g.to_networkx()))
    return sorted(components, key=min)


def induced_components(g: Graph, vertices: Iterable[int]) -> List[FrozenSet[int]]:
    """Connected components of the subgraph induced by ``vertices``."""
    sub = g.to_networkx().subgraph(vertices)
    return sorted((frozenset(c) for c in nx.connected_components(sub)), key=min)
