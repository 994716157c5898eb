"""Matrix-level checks of the Jordan-Wigner relations, each reported as a worst-case residual."""
import logging
from itertools import product
from typing import Dict

import numpy as np

from src.fermion.jordan_wigner import (
    FermionMonomial,
    FermionPolynomial,
    chain_graph,
    density_density,
    fermion_op,
    hopping,
    hopping_chain,
    hopping_chain_closed_form,
    hopping_matrix_oracle,
    jw_map,
    majorana,
    number_op,
    one_particle_spectrum,
    polynomial_sum,
)
from src.operators.core import anticommutator, embed, kron_all, op_norm, support_of
from src.operators.paulis import I2, X, Y, Z

logger = logging.getLogger(__name__)


def _string(N: int, j: int, k: int, middle=Z) -> np.ndarray:
    """`middle` on sites j..k−1, identity elsewhere."""
    return kron_all([middle if j <= site < k else I2 for site in range(1, N + 1)])


def _site(N: int, j: int, local: np.ndarray) -> np.ndarray:
    return embed(local, [j], chain_graph(N)).matrix


def mapping_residuals(N: int) -> Dict[str, float]:
    """Largest deviation of each mapping identity over all sites (and site pairs) of an N-site chain."""
    D = 2 ** N
    eye = np.eye(D)
    worst = {k: 0.0 for k in ("f_plus_fdag", "i_f_minus_fdag", "f_definition", "number", "Z", "X", "Y",
                              "hopping_string")}

    def record(key: str, a: np.ndarray, b: np.ndarray):
        worst[key] = max(worst[key], op_norm(a - b))

    for j in range(1, N + 1):
        f, fd = fermion_op(j, False, N).matrix, fermion_op(j, True, N).matrix
        w_odd, w_even = majorana(2 * j - 1, N).matrix, majorana(2 * j, N).matrix
        left = _string(N, 1, j)
        record("f_plus_fdag", f + fd, w_odd)
        record("i_f_minus_fdag", 1j * f - 1j * fd, w_even)
        record("f_definition", f, 0.5 * (w_odd - 1j * w_even))
        record("number", jw_map(number_op(j), N).matrix, (eye + _site(N, j, Z)) / 2)
        record("Z", _site(N, j, Z), -1j * w_odd @ w_even)
        record("X", _site(N, j, X), left @ w_odd)
        record("Y", _site(N, j, Y), left @ w_even)

    S_plus, S_minus = X + 1j * Y, X - 1j * Y
    for j, k in product(range(1, N + 1), repeat=2):
        if j > k:
            continue
        mapped = jw_map(FermionPolynomial.of(FermionMonomial(((j, True), (k, False)))), N).matrix
        expected = 0.25 * _site(N, j, S_plus) @ _string(N, j, k) @ _site(N, k, S_minus)
        record("hopping_string", mapped, expected)
    return worst


def anticommutation_residuals(N: int) -> Dict[str, float]:
    """{w_j, w_k} = 2δ over all 2N×2N Majorana pairs, plus the canonical relations and nilpotency of f_j."""
    eye = np.eye(2 ** N)
    worst = {"majorana": 0.0, "f_fdag": 0.0, "f_f": 0.0, "nilpotent": 0.0}
    ws = [majorana(k, N).matrix for k in range(1, 2 * N + 1)]
    for a, b in product(range(2 * N), repeat=2):
        worst["majorana"] = max(worst["majorana"], op_norm(anticommutator(ws[a], ws[b]) - 2 * (a == b) * eye))
    fs = [fermion_op(j, False, N).matrix for j in range(1, N + 1)]
    for a, b in product(range(N), repeat=2):
        worst["f_fdag"] = max(worst["f_fdag"], op_norm(anticommutator(fs[a], fs[b].conj().T) - (a == b) * eye))
        worst["f_f"] = max(worst["f_f"], op_norm(anticommutator(fs[a], fs[b])))
    worst["nilpotent"] = max(op_norm(f @ f) for f in fs)
    return worst


def homomorphism_residual(N: int) -> float:
    """jw_map(PQ) against jw_map(P)·jw_map(Q) for nearest-neighbour hoppings and number operators."""
    polys = [number_op(j) for j in range(1, N + 1)] + [hopping(j, j + 1, 0.7 - 0.2j) for j in range(1, N)]
    worst = 0.0
    for P, Q in product(polys, repeat=2):
        worst = max(worst, op_norm(jw_map(P * Q, N).matrix - jw_map(P, N).matrix @ jw_map(Q, N).matrix))
    return worst


def locality_violations(N: int) -> int:
    """Number of nearest-neighbour even polynomials whose spin image leaves {j, j+1}."""
    violations = 0
    for j in range(1, N):
        for poly in (hopping(j, j + 1), density_density(j, j + 1)):
            if not support_of(jw_map(poly, N)) <= {j, j + 1}:
                violations += 1
    return violations


def spectrum_residual(N: int, J: float = 1.0, mu: float = 0.0) -> float:
    """One-fermion spectrum of the mapped hopping chain against the N×N single-particle matrix."""
    H = jw_map(polynomial_sum(poly for _, poly in hopping_chain(N, J, mu)), N)
    measured = one_particle_spectrum(H, N)
    residual = float(np.max(np.abs(measured - hopping_matrix_oracle(N, J, mu))))
    if mu == 0.0:
        residual = max(residual, float(np.max(np.abs(measured - hopping_chain_closed_form(N, J)))))
    logger.debug(f"One-particle spectrum residual at N={N}: {residual:.3e}")
    return residual
