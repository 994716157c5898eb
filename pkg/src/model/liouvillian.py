import logging
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import SupportNotInGraph, TooLarge
from src.graph.hypergraph import Edge, InteractionGraph, Vertex, max_neighbors
from src.IR.models import Picture
from src.operators.core import GlobalOperator, embed, op_norm
from src.model.terms import LindbladTerm, act, placement

logger = logging.getLogger(__name__)

B_SAFETY = 1 + 1e-6
MAX_GENERATOR_DIM = 64


def edge_sort_key(edge: Iterable[Vertex]) -> Tuple:
    """Lexicographic key on the sorted support; the fixed order used by product formulas."""
    return tuple(sorted(edge, key=lambda v: (str(type(v)), v)))


@dataclass(frozen=True, eq=False)
class LocalLiouvillian:
    """
    Sum of strictly local terms over an interaction hypergraph, with derived E, b and Z.

    Immutable after assembly; every application is pure.
    """
    graph: InteractionGraph
    terms: Tuple[LindbladTerm, ...]
    edges: Tuple[Edge, ...]
    b: float
    Z: int

    @cached_property
    def interaction_graph(self) -> InteractionGraph:
        """The graph restricted to E, the supports of the nonzero terms."""
        return self.graph.with_edges(self.edges)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_time_independent(self) -> bool:
        return all(term.schedule.is_time_independent for term in self.terms)

    def breakpoints(self, s: float, t: float) -> List[float]:
        points = set()
        for term in self.terms:
            points.update(term.schedule.breakpoints(s, t))
        return sorted(points)

    def segments(self, s: float, t: float) -> List[Tuple[float, float]]:
        """[s, t] split at every schedule breakpoint strictly inside it."""
        cuts = [s] + self.breakpoints(s, t) + [t]
        return list(zip(cuts[:-1], cuts[1:]))

    def apply(self, t: float, A: np.ndarray, picture: Picture, anchor: Optional[float] = None) -> np.ndarray:
        """Full generator on a dense matrix; `anchor` selects the schedule piece used for every term."""
        out = np.zeros_like(A, dtype=complex)
        for term in self.terms:
            out += act(term, term.schedule.value(t, anchor), A, self.graph, picture)
        return out

    def apply_operator(self, t: float, A: GlobalOperator, picture: Picture = Picture.HEISENBERG) -> GlobalOperator:
        return A.with_matrix(self.apply(t, A.matrix, picture))

    def edge_groups(self) -> "OrderedDict[Edge, List[LindbladTerm]]":
        """Terms grouped by support, ordered lexicographically by sorted support."""
        groups: Dict[Edge, List[LindbladTerm]] = {}
        for term in self.terms:
            groups.setdefault(frozenset(term.support), []).append(term)
        return OrderedDict((edge, groups[edge]) for edge in sorted(groups, key=edge_sort_key))

    def generator_matrix(self, t: float, picture: Picture = Picture.HEISENBERG,
                         anchor: Optional[float] = None) -> np.ndarray:
        """Dense superoperator of the full generator on column-stacked vec, for Hilbert dimension <= 64."""
        D = self.graph.hilbert_dim
        if D > MAX_GENERATOR_DIM:
            raise TooLarge(f"Generator matrix needs Hilbert dimension <= {MAX_GENERATOR_DIM}, got {D}")
        I = np.eye(D, dtype=complex)
        S = np.zeros((D * D, D * D), dtype=complex)
        for term in self.terms:
            c = term.schedule.value(t, anchor)
            if c == 0.0:
                continue
            H = embed(term.hamiltonian, term.support, self.graph).matrix
            sign = 1j if picture == Picture.HEISENBERG else -1j
            part = sign * (np.kron(I, H) - np.kron(H.T, I))
            if term.jumps:
                K = embed(term.dissipator_sum, term.support, self.graph).matrix
                part -= np.kron(I, K) + np.kron(K.T, I)
            for L in term.jumps:
                Lg = embed(L, term.support, self.graph).matrix
                if picture == Picture.HEISENBERG:
                    part += 2 * np.kron(Lg.T, Lg.conj().T)
                else:
                    part += 2 * np.kron(Lg.conj(), Lg)
            S += c * part
        return S

    def __str__(self):
        return f"LocalLiouvillian(terms={len(self.terms)}, |E|={len(self.edges)}, b={self.b:.6g}, Z={self.Z})"

    def __repr__(self):
        return self.__str__()


def assemble(graph: InteractionGraph, terms: Sequence[LindbladTerm], strict: bool = False) -> LocalLiouvillian:
    """
    Builds a LocalLiouvillian, dropping identically-zero terms from E.

    Supports missing from the graph's hyperedges are added, or rejected when `strict`.
    """
    terms = tuple(terms)
    for term in terms:
        placement(term, graph)

    live = tuple(term for term in terms if not term.is_zero())
    edges = sorted({frozenset(term.support) for term in live if term.support}, key=edge_sort_key)
    missing = [e for e in edges if e not in graph]
    if missing:
        if strict:
            raise SupportNotInGraph(f"Term supports {[sorted(e, key=str) for e in missing]} are not hyperedges")
        logger.info(f"Adding {len(missing)} term supports to the hyperedge set")
        graph = graph.with_edges(list(graph.hyperedges) + missing)

    # term_norm(term, t) == |c(t)| * term.base_norm
    b = B_SAFETY * max((max(term.schedule.sample_values()) * term.base_norm for term in live), default=0.0)

    Z = max_neighbors(graph.with_edges(edges)) if edges else 0
    liouvillian = LocalLiouvillian(graph, live, tuple(edges), b, Z)
    logger.debug(f"Assembled {liouvillian}")
    return liouvillian


def truncate(L: LocalLiouvillian, region: Iterable[Vertex]) -> LocalLiouvillian:
    """L restricted to the terms whose support lies inside `region`; the Hilbert space is unchanged."""
    region = set(region)
    L.graph.check_vertices(region)
    kept = [term for term in L.terms if set(term.support) <= region]
    return assemble(L.graph, kept)


def stationarity_residual(L: LocalLiouvillian, rho: GlobalOperator, t: float = 0.0) -> float:
    """‖L_t†(ρ)‖: zero exactly when ρ is stationary at time t."""
    return op_norm(L.apply(t, rho.matrix, Picture.SCHRODINGER))
