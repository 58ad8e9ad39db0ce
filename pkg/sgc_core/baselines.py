"""
Comparison clusterings: MaxMax and k-clique percolation.

Neither method produces membership proportions, so both return plain vertex
sets.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import FrozenSet, Iterable, List, Tuple

import networkx as nx

from .graph import Graph
from .solver import Solution
from .utils import ParameterError

logger = logging.getLogger(__name__)


class Origin(str, Enum):
    MAXMAX = "maxmax"
    CLIQUE_PERCOLATION = "cpm"
    MILP = "milp"


def _ordered(clusters: Iterable[Iterable[int]]) -> Tuple[FrozenSet[int], ...]:
    unique = {frozenset(c) for c in clusters if c}
    return tuple(sorted(unique, key=lambda c: (min(c), sorted(c))))


@dataclass(frozen=True)
class SoftClustering:
    clusters: Tuple[FrozenSet[int], ...]
    origin: Origin

    def __post_init__(self):
        if any(not c for c in self.clusters):
            raise ParameterError("clusters must be nonempty")

    def covered(self) -> FrozenSet[int]:
        return frozenset().union(*self.clusters)

    def overlap_vertices(self) -> FrozenSet[int]:
        counts = defaultdict(int)
        for cluster in self.clusters:
            for i in cluster:
                counts[i] += 1
        return frozenset(i for i, count in counts.items() if count > 1)

    @classmethod
    def from_solution(cls, s: Solution, k: int) -> "SoftClustering":
        return cls(_ordered(s.clusters(k)), Origin.MILP)


def maxmax(g: Graph) -> SoftClustering:
    """MaxMax clustering.

    Arc u -> v whenever w(u, v) is the heaviest weight incident to v (every
    tied arc is kept). All vertices start as roots; scanning in ascending
    id, each vertex still marked root unmarks its descendants. Each
    remaining root forms a cluster with its descendants.
    """
    arcs = nx.DiGraph()
    arcs.add_nodes_from(range(g.n))
    for v in range(g.n):
        heaviest = max((g.weight(u, v) for u in g.neighbors(v)), default=None)
        for u in g.neighbors(v):
            if g.weight(u, v) == heaviest:
                arcs.add_edge(u, v)
    root = [True] * g.n
    for v in range(g.n):
        if root[v]:
            for d in nx.descendants(arcs, v):
                root[d] = False
    clusters = [{v} | nx.descendants(arcs, v) for v in range(g.n) if root[v]]
    result = SoftClustering(_ordered(clusters), Origin.MAXMAX)
    logger.info(f"MaxMax found {len(result.clusters)} cluster(s)")
    return result


def k_cliques(graph: nx.Graph, k: int) -> List[FrozenSet[int]]:
    """All k-vertex cliques, taken as subsets of the maximal cliques."""
    found = set()
    for clique in nx.find_cliques(graph):
        if len(clique) >= k:
            found.update(frozenset(sub) for sub in combinations(sorted(clique), k))
    return sorted(found, key=sorted)


def clique_percolation(g: Graph, k: int = 3, w_star: float = 0) -> SoftClustering:
    """Communities of k-cliques chained by shared (k-1)-subsets, on edges with w > w_star."""
    if k < 2:
        raise ParameterError(f"clique size must be >= 2, got {k}")
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from((i, j) for i, j, w in g.edges if w > w_star)
    cliques = k_cliques(h, k)

    adjacency = nx.Graph()
    adjacency.add_nodes_from(range(len(cliques)))
    by_face = defaultdict(list)
    for idx, clique in enumerate(cliques):
        for face in combinations(sorted(clique), k - 1):
            by_face[face].append(idx)
    for members in by_face.values():
        adjacency.add_edges_from(zip(members, members[1:]))

    communities = [
        frozenset().union(*(cliques[idx] for idx in component))
        for component in nx.connected_components(adjacency)
    ]
    result = SoftClustering(_ordered(communities), Origin.CLIQUE_PERCOLATION)
    logger.info(
        f"Clique percolation (k={k}, w*={w_star}) found {len(cliques)} clique(s), "
        f"{len(result.clusters)} communit(ies)"
    )
    return result
