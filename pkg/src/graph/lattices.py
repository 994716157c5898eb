from typing import List, Tuple

from src.graph.hypergraph import InteractionGraph


def chain(n: int, start: int = 1, local_dim: int = 2, with_sites: bool = False) -> InteractionGraph:
    """Open nearest-neighbor chain on sites start..start+n-1, optionally with single-site hyperedges."""
    sites = list(range(start, start + n))
    edges: List[Tuple[int, ...]] = [(a, a + 1) for a in sites[:-1]]
    if with_sites:
        edges += [(a,) for a in sites]
    return InteractionGraph(sites, edges, local_dim)


def square_lattice(side: int, local_dim: int = 2) -> InteractionGraph:
    """Open side x side nearest-neighbor lattice; vertex (row, col) has id row * side + col."""
    sites = list(range(side * side))
    edges = []
    for r in range(side):
        for c in range(side):
            v = r * side + c
            if c + 1 < side:
                edges.append((v, v + 1))
            if r + 1 < side:
                edges.append((v, v + side))
    return InteractionGraph(sites, edges, local_dim)


def _grid_site(x: int, y: int) -> int:
    return 5 * y + x


# Hyperedges of the 5 x 4 example hypergraph, written as (x, y) grid coordinates.
FIGURE_HYPEREDGES = [
    [(4, 0)],
    [(1, 1), (2, 2)],
    [(1, 2), (2, 1)],
    [(3, 2), (3, 3), (4, 3)],
    [(3, 0), (3, 1), (4, 1)],
    [(0, 1), (1, 1), (1, 0)],
    [(0, 2), (0, 3), (1, 3)],
    [(2, 3), (3, 3)],
    [(1, 0), (2, 0)],
    [(3, 1), (2, 2)],
    [(3, 2), (4, 2)],
    [(2, 0), (3, 0)],
    [(4, 2), (4, 1)],
    [(2, 3), (2, 2)],
]


def figure_hypergraph(local_dim: int = 2) -> InteractionGraph:
    """The 20-site example hypergraph with maximum neighbor count Z = 4."""
    sites = [_grid_site(x, y) for y in range(4) for x in range(5)]
    edges = [[_grid_site(x, y) for x, y in edge] for edge in FIGURE_HYPEREDGES]
    return InteractionGraph(sorted(sites), edges, local_dim)


FIGURE_EDGE_X = frozenset(_grid_site(x, y) for x, y in [(3, 0), (3, 1), (4, 1)])
