import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import OddParity, OperatorError
from src.graph.hypergraph import InteractionGraph
from src.IR.models import BoundParameters, BoundReport, Parity
from src.lab.leakage import leakage_series
from src.model.liouvillian import LocalLiouvillian, assemble
from src.model.schedule import CONSTANT_ONE, TimeSchedule
from src.model.terms import LindbladTerm
from src.operators.core import DEFAULT_TOL, GlobalOperator, embed, op_norm, partial_trace_restriction
from src.fermion.jordan_wigner import FermionPolynomial, chain_graph, jw_map, parity_of

logger = logging.getLogger(__name__)

FermionTerm = Tuple[Sequence[int], FermionPolynomial, TimeSchedule]


def fermionic_graph(N: int, supports: Sequence[Sequence[int]]) -> InteractionGraph:
    """Interaction graph on sites 1..N built from the fermionic supports, before any mapping."""
    return InteractionGraph(list(range(1, N + 1)), [tuple(s) for s in supports], 2)


def _spin_term(poly: FermionPolynomial, N: int, schedule: TimeSchedule, tol: float) -> LindbladTerm:
    """Hamiltonian-only term on the spin support of jw_map(poly)."""
    spin = jw_map(poly, N)
    g = spin.graph
    support = g.ordered(spin.declared_support)
    local = partial_trace_restriction(spin, support) if support else np.eye(1)
    if support and op_norm(embed(local, support, g).matrix - spin.matrix) > tol * max(1.0, op_norm(spin)):
        raise OperatorError(f"Mapped polynomial {poly} is not supported on {support}")
    return LindbladTerm(tuple(support), local, schedule=schedule, label="fermion")


def spin_liouvillian(terms: Sequence[FermionTerm], N: int, tol: float = DEFAULT_TOL) -> LocalLiouvillian:
    """Hamiltonian-only Liouvillian on the Jordan-Wigner spin chain."""
    for support, poly, _ in terms:
        if parity_of(poly) != Parity.EVEN:
            raise OddParity(f"Hamiltonian term on {list(support)} is not an even polynomial")
    spin_terms = [_spin_term(poly, N, schedule or CONSTANT_ONE, tol) for _, poly, schedule in terms]
    return assemble(chain_graph(N), [t for t in spin_terms if t.support])


def _mapped_observable(poly: FermionPolynomial, N: int, allow_odd: bool) -> GlobalOperator:
    """JW image tagged with its fermionic sites, which is what distances are measured on."""
    spin = jw_map(poly, N, allow_odd=allow_odd)
    return spin.with_matrix(spin.matrix, poly.sites)


def fermionic_lr_experiment(H_terms: Sequence[FermionTerm], A: FermionPolynomial,
                            observables: Sequence[FermionPolynomial], N: int, s: float, t: float,
                            params: Optional[BoundParameters] = None, allow_odd: bool = False,
                            tol: float = DEFAULT_TOL, verdict_thresholds: Optional[Dict[str, float]] = None,
                            name: str = "fermionic_cone") -> BoundReport:
    """
    Commutator leakage of mapped observables under a mapped Hamiltonian.

    Distances are taken on the fermionic graph. Odd observables are rejected unless `allow_odd`;
    pairs where both A and B are odd then report the anticommutator leakage.
    """
    F = fermionic_graph(N, [support for support, _, _ in H_terms])
    L = spin_liouvillian(H_terms, N, tol)
    if any(parity_of(p) != Parity.EVEN for p in [A, *observables]) and not allow_odd:
        raise OddParity("Observables must be even polynomials unless the odd override is set")
    A_spin = _mapped_observable(A, N, allow_odd)
    B_spin: List[GlobalOperator] = [_mapped_observable(B, N, allow_odd) for B in observables]
    logger.info(f"Fermionic experiment on N={N}: {len(H_terms)} Hamiltonian terms, {len(B_spin)} observables")
    a_odd = parity_of(A) == Parity.ODD
    flags = [a_odd and parity_of(B) == Parity.ODD for B in observables]
    report = leakage_series(L, A_spin, B_spin, s, t, params, tol, anticommute=flags,
                            verdict_thresholds=verdict_thresholds, name=name, graph=F)
    report.parameters["anticommutator"] = any(flags)
    return report
