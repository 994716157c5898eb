"""
Materialized propagators on the column-stacked operator space.

vec(A) stacks columns, so the superoperator of ρ ↦ AρB is (Bᵀ ⊗ A) and vec index k = i + D·j
addresses matrix element [i, j].
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm
from tqdm import tqdm

from src.errors import ModelError, PropagationError, TooLarge
from src.IR.models import Picture
from src.model.liouvillian import MAX_GENERATOR_DIM, LocalLiouvillian
from src.operators.core import DEFAULT_TOL, GlobalOperator
from src.propagation.integrator import integrate

logger = logging.getLogger(__name__)

MAX_SUPEROPERATOR_DIM = 128


def vec(A: np.ndarray) -> np.ndarray:
    return np.asarray(A).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: Optional[int] = None) -> np.ndarray:
    dim = dim or math.isqrt(v.shape[0])
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class SuperoperatorMatrix:
    """Dense linear map on vec(operators): T(t, s) in the Schrödinger picture or τ(s, t) in the Heisenberg."""
    matrix: np.ndarray
    s: float
    t: float
    picture: Picture = Picture.SCHRODINGER

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = m.shape[0]
        if m.ndim != 2 or m.shape != (n, n) or math.isqrt(n) ** 2 != n:
            raise PropagationError(f"Superoperator shape {m.shape} is not (D², D²)")
        object.__setattr__(self, "matrix", m)

    @property
    def hilbert_dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    def apply(self, A: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(A), self.hilbert_dim)

    def apply_operator(self, A: GlobalOperator) -> GlobalOperator:
        return A.with_matrix(self.apply(A.matrix))

    def adjoint(self) -> "SuperoperatorMatrix":
        other = Picture.HEISENBERG if self.picture == Picture.SCHRODINGER else Picture.SCHRODINGER
        return SuperoperatorMatrix(self.matrix.conj().T, self.s, self.t, other)

    def __matmul__(self, other: "SuperoperatorMatrix") -> "SuperoperatorMatrix":
        """Composition: (self @ other) applies `other` first."""
        return SuperoperatorMatrix(self.matrix @ other.matrix, min(self.s, other.s), max(self.t, other.t),
                                   self.picture)

    def __str__(self):
        return f"SuperoperatorMatrix({self.picture.value}, D={self.hilbert_dim}, s={self.s:g}, t={self.t:g})"

    def __repr__(self):
        return self.__str__()


def _check_cap(L: LocalLiouvillian, cap: int = MAX_SUPEROPERATOR_DIM) -> int:
    D = L.graph.hilbert_dim
    if D > cap:
        raise TooLarge(f"Materializing a propagator needs Hilbert dimension <= {cap}, got {D}")
    return D


def _materialize(L: LocalLiouvillian, s: float, t: float, picture: Picture, tol: float,
                 jobs: Optional[int], quiet: bool = True) -> np.ndarray:
    D = _check_cap(L)

    def column(k: int) -> np.ndarray:
        unit = np.zeros((D, D), dtype=complex)
        unit[k % D, k // D] = 1.0
        return vec(integrate(L, unit, s, t, picture, tol))

    workers = jobs or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        columns = list(tqdm(executor.map(column, range(D * D)), total=D * D,
                            desc=f"Propagating basis ({picture.value})", unit="col", disable=quiet))
    return np.stack(columns, axis=1)


def propagator_matrix(L: LocalLiouvillian, s: float, t: float, tol: float = DEFAULT_TOL,
                      jobs: Optional[int] = None) -> SuperoperatorMatrix:
    """T(t, s), column k being T applied to the k-th matrix unit."""
    logger.debug(f"Materializing T({t:g}, {s:g}) for {L}")
    return SuperoperatorMatrix(_materialize(L, s, t, Picture.SCHRODINGER, tol, jobs), s, t, Picture.SCHRODINGER)


def heisenberg_propagator_matrix(L: LocalLiouvillian, s: float, t: float, tol: float = DEFAULT_TOL,
                                 jobs: Optional[int] = None) -> SuperoperatorMatrix:
    """τ(s, t) built from backward observable evolution of the matrix units."""
    return SuperoperatorMatrix(_materialize(L, s, t, Picture.HEISENBERG, tol, jobs), s, t, Picture.HEISENBERG)


def choi_matrix(T: SuperoperatorMatrix) -> np.ndarray:
    """Σ_ij |i⟩⟨j| ⊗ T(|i⟩⟨j|), input factor first."""
    D = T.hilbert_dim
    if D > MAX_SUPEROPERATOR_DIM:
        raise TooLarge(f"Choi matrix needs Hilbert dimension <= {MAX_SUPEROPERATOR_DIM}, got {D}")
    return np.transpose(T.matrix.reshape(D, D, D, D), (3, 1, 2, 0)).reshape(D * D, D * D)


def choi_min_eigenvalue(T: SuperoperatorMatrix) -> float:
    C = choi_matrix(T)
    return float(np.linalg.eigvalsh((C + C.conj().T) / 2).min())


def trace_preservation_error(T: SuperoperatorMatrix) -> float:
    """max |vec(1)ᵀT − vec(1)ᵀ|; zero iff Tr T(A) = Tr A for every A."""
    row = vec(np.eye(T.hilbert_dim))
    return float(np.max(np.abs(row @ T.matrix - row)))


def adjoint_consistency_check(L: LocalLiouvillian, s: float, t: float, tol: float = DEFAULT_TOL,
                              jobs: Optional[int] = None) -> float:
    """Frobenius distance between τ(s, t) and T(t, s)†, built by independent integrations."""
    T = propagator_matrix(L, s, t, tol, jobs)
    tau = heisenberg_propagator_matrix(L, s, t, tol, jobs)
    discrepancy = float(np.linalg.norm(tau.matrix - T.matrix.conj().T))
    logger.debug(f"Adjoint consistency on [{s:g}, {t:g}]: {discrepancy:.3e}")
    return discrepancy


def exact_propagator(L: LocalLiouvillian, s: float, t: float,
                     picture: Picture = Picture.SCHRODINGER) -> SuperoperatorMatrix:
    """
    Product of matrix exponentials over schedule segments, for Hilbert dimension <= 64.

    Every schedule must be constant on each segment of [s, t].
    """
    D = L.graph.hilbert_dim
    if D > MAX_GENERATOR_DIM:
        raise TooLarge(f"Exact propagator needs Hilbert dimension <= {MAX_GENERATOR_DIM}, got {D}")
    result = np.eye(D * D, dtype=complex)
    for a, b in L.segments(s, t):
        anchor = (a + b) / 2
        for term in L.terms:
            if not term.schedule.piece_at(anchor).is_constant:
                raise ModelError(f"{term} is not constant on [{a:g}, {b:g}]; no closed-form propagator")
        G = L.generator_matrix(anchor, picture, anchor=anchor)
        step = expm(G * (b - a))
        # T composes later segments on the left; τ composes them on the right
        result = step @ result if picture == Picture.SCHRODINGER else result @ step
    return SuperoperatorMatrix(result, s, t, picture)


def forward_heisenberg(L: LocalLiouvillian, A: GlobalOperator, s: float, t: float,
                       tol: float = DEFAULT_TOL) -> GlobalOperator:
    """
    Forward solution of dA/dt = L_t(A) from s.

    Agrees with τ(s, t)(A) only when the generators at different times commute, e.g. for
    time-independent Liouvillians.
    """
    return A.with_matrix(integrate(L, A.matrix, s, t, Picture.HEISENBERG, tol, backward=False))


def transpose_map(D: int) -> SuperoperatorMatrix:
    """A ↦ Aᵀ: positive and trace preserving but not completely positive."""
    K = np.zeros((D * D, D * D), dtype=complex)
    for i in range(D):
        for j in range(D):
            K[i + j * D, j + i * D] = 1.0
    return SuperoperatorMatrix(K, 0.0, 0.0, Picture.SCHRODINGER)
