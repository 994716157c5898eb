import logging
import math
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from src.errors import BadDimension, Disconnected, EmptyEdge, EmptySet, GraphError, NoEdges, NotAnEdge, UnknownVertex
from src.IR.models import DistanceResult, INFINITE_DISTANCE

logger = logging.getLogger(__name__)

Vertex = Hashable
Edge = FrozenSet[Vertex]


class InteractionGraph:
    """
    Interaction hypergraph (V, E) with a Hilbert-space dimension per vertex.

    Vertex order is significant: it fixes the tensor-factor order of every operator built on the graph
    (first vertex = most significant factor). Instances are immutable; all queries are pure.
    """

    def __init__(self, vertices: Sequence[Vertex], hyperedges: Iterable[Iterable[Vertex]] = (),
                 local_dims: Union[int, Mapping[Vertex, int]] = 2):
        vertices = tuple(vertices)
        if len(set(vertices)) != len(vertices):
            raise GraphError(f"Vertex identifiers must be unique: {vertices}")
        known = set(vertices)

        if isinstance(local_dims, int):
            dims = {v: local_dims for v in vertices}
        else:
            dims = dict(local_dims)
            missing = [v for v in vertices if v not in dims]
            if missing:
                raise BadDimension(f"No local dimension declared for vertices {missing}")
        for v in vertices:
            if int(dims[v]) < 2:
                raise BadDimension(f"Local dimension of vertex {v} must be >= 2, got {dims[v]}")

        edges: List[Edge] = []
        seen: Set[Edge] = set()
        for raw in hyperedges:
            edge = frozenset(raw)
            if not edge:
                raise EmptyEdge("Hyperedges must be non-empty")
            unknown = edge - known
            if unknown:
                raise UnknownVertex(f"Hyperedge {sorted(edge, key=str)} references undeclared vertices {sorted(unknown, key=str)}")
            if edge not in seen:
                seen.add(edge)
                edges.append(edge)

        self._vertices = vertices
        self._edges = tuple(edges)
        self._edge_set = frozenset(edges)
        self._dims = {v: int(dims[v]) for v in vertices}
        self._position = {v: i for i, v in enumerate(vertices)}

    # --- Read-only views ---

    @property
    def vertices(self) -> Tuple[Vertex, ...]:
        return self._vertices

    @property
    def hyperedges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def local_dims(self) -> Dict[Vertex, int]:
        return dict(self._dims)

    @property
    def dims(self) -> List[int]:
        """Local dimensions in vertex order."""
        return [self._dims[v] for v in self._vertices]

    @property
    def hilbert_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def dim_of(self, sites: Iterable[Vertex]) -> int:
        return int(np.prod([self._dims[v] for v in sites], dtype=np.int64))

    def position(self, vertex: Vertex) -> int:
        try:
            return self._position[vertex]
        except KeyError:
            raise UnknownVertex(f"Vertex {vertex} is not part of the graph") from None

    def ordered(self, sites: Iterable[Vertex]) -> List[Vertex]:
        """Sorts a vertex set into declared vertex order."""
        return sorted(set(sites), key=self.position)

    def check_vertices(self, sites: Iterable[Vertex]):
        unknown = [v for v in sites if v not in self._position]
        if unknown:
            raise UnknownVertex(f"Vertices {unknown} are not part of the graph")

    def with_edges(self, edges: Iterable[Iterable[Vertex]]) -> "InteractionGraph":
        """Same vertices and dimensions, replacing the hyperedge set."""
        return InteractionGraph(self._vertices, edges, self._dims)

    def __contains__(self, edge) -> bool:
        return frozenset(edge) in self._edge_set

    def __eq__(self, other):
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return (self._vertices == other._vertices and set(self._edges) == set(other._edges)
                and self._dims == other._dims)

    def __hash__(self):
        return hash((self._vertices, frozenset(self._edges), tuple(self.dims)))

    def __str__(self):
        return f"InteractionGraph(|V|={len(self._vertices)}, |E|={len(self._edges)}, D={self.hilbert_dim})"

    def __repr__(self):
        return self.__str__()

    # --- Edge intersection graph ---

    @cached_property
    def edge_graph(self) -> nx.Graph:
        """Nodes are hyperedge indices; two hyperedges are adjacent iff they share a vertex."""
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self._edges)))
        for i, a in enumerate(self._edges):
            for j in range(i + 1, len(self._edges)):
                if a & self._edges[j]:
                    graph.add_edge(i, j)
        return graph

    @cached_property
    def _edge_hops(self) -> Dict[int, Dict[int, int]]:
        return dict(nx.all_pairs_shortest_path_length(self.edge_graph))

    def edges_meeting(self, sites: Iterable[Vertex]) -> List[int]:
        sites = set(sites)
        return [i for i, e in enumerate(self._edges) if e & sites]


def build_graph(vertices: Sequence[Vertex], hyperedges: Iterable[Iterable[Vertex]],
                local_dims: Union[int, Mapping[Vertex, int]]) -> InteractionGraph:
    """Validates and returns the interaction hypergraph; duplicate hyperedges are merged."""
    graph = InteractionGraph(vertices, hyperedges, local_dims)
    logger.debug(f"Built {graph}")
    return graph


def distance(g: InteractionGraph, X: Iterable[Vertex], Y: Iterable[Vertex]) -> DistanceResult:
    """
    Hyperedge path distance between two vertex sets.

    0 iff the sets intersect; otherwise the number of hyperedges in the shortest chain of pairwise
    intersecting hyperedges whose first element meets X and whose last meets Y.
    """
    X, Y = set(X), set(Y)
    if not X or not Y:
        raise EmptySet("Distance is only defined between non-empty vertex sets")
    g.check_vertices(X | Y)
    if X & Y:
        return DistanceResult(0)

    sources = g.edges_meeting(X)
    targets = set(g.edges_meeting(Y))
    if not sources or not targets:
        return INFINITE_DISTANCE

    hops = g._edge_hops
    best = math.inf
    for i in sources:
        reach = hops[i]
        for j in targets:
            if j in reach and reach[j] < best:
                best = reach[j]
    if best == math.inf:
        return INFINITE_DISTANCE
    return DistanceResult(int(best) + 1)


def sphere(g: InteractionGraph, X: Iterable[Vertex], n: int) -> FrozenSet[Edge]:
    """S_X(n): the hyperedges at distance exactly n from the hyperedge X."""
    X = frozenset(X)
    if X not in g:
        raise NotAnEdge(f"{sorted(X, key=str)} is not a hyperedge of the graph")
    if n < 0:
        raise ValueError(f"Sphere radius must be non-negative, got {n}")
    return frozenset(Y for Y in g.hyperedges if distance(g, Y, X) == n)


def max_neighbors(g: InteractionGraph) -> int:
    """Z: the largest number of hyperedges intersecting a hyperedge, counting itself."""
    if not g.hyperedges:
        raise NoEdges("Z is undefined on a graph without hyperedges")
    return max(1 + g.edge_graph.degree(i) for i in range(len(g.hyperedges)))


def is_connected(g: InteractionGraph) -> bool:
    """Whether every pair of hyperedges is joined by a chain of intersecting hyperedges."""
    return bool(g.hyperedges) and nx.is_connected(g.edge_graph)


def diameter(g: InteractionGraph) -> int:
    """Largest distance between two hyperedges."""
    if not g.hyperedges:
        raise NoEdges("Diameter is undefined on a graph without hyperedges")
    if not is_connected(g):
        raise Disconnected("Hyperedges do not form a connected graph")
    return max(distance(g, a, b).value for a in g.hyperedges for b in g.hyperedges)


def sphere_sizes(g: InteractionGraph) -> np.ndarray:
    """Matrix of |S_X(n)|, rows indexed by hyperedge, columns by n = 0..diameter."""
    diam = diameter(g)
    sizes = np.zeros((len(g.hyperedges), diam + 1), dtype=int)
    for i, X in enumerate(g.hyperedges):
        for Y in g.hyperedges:
            sizes[i, distance(g, Y, X).value] += 1
    return sizes


def spatial_dimension_constant(g: InteractionGraph, mu: int) -> float:
    """
    Smallest M with |S_X(n)| <= M n^(mu-1) for every hyperedge X and 1 <= n <= diameter.

    Returns 0.0 when the diameter is 0, since no sphere with n >= 1 is then non-empty.
    """
    if mu < 1:
        raise ValueError(f"Spatial dimension exponent must be >= 1, got {mu}")
    sizes = sphere_sizes(g)
    if sizes.shape[1] <= 1:
        return 0.0
    n = np.arange(1, sizes.shape[1], dtype=float)
    return float(np.max(sizes[:, 1:] / n ** (mu - 1)))


def estimate_spatial_dimension(g: InteractionGraph) -> int:
    """Growth exponent of the largest spheres, used when a config asks for mu = "auto"."""
    sizes = sphere_sizes(g)
    largest = sizes[:, 1:].max(axis=0) if sizes.shape[1] > 1 else np.array([])
    n = np.arange(1, len(largest) + 1)
    mask = largest > 0
    if mask.sum() < 2:
        return 1
    slope = np.polyfit(np.log(n[mask]), np.log(largest[mask]), 1)[0]
    return max(1, int(round(1 + slope)))
