import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.stats import unitary_group

from src.errors import DimensionMismatch, NotHermitian
from src.graph.hypergraph import InteractionGraph, Vertex
from src.IR.models import Picture
from src.operators.core import DEFAULT_TOL, GlobalOperator, apply_local_left, apply_local_right, embed, op_norm
from src.model.schedule import CONSTANT_ONE, TimeSchedule

logger = logging.getLogger(__name__)

NORM_RANDOM_STARTS = 4
NORM_REFINED_STARTS = 3
NORM_MAX_ITER = 200

# induced norms keyed by (generator bytes, local dimension)
_NORM_CACHE: Dict[Tuple[bytes, int], float] = {}


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    """
    One strictly local generator c(t)·L_X: Hamiltonian H and jump operators L_mu on `support`.

    Matrix factors follow the order of `support`. `site_dims` defaults to qubits, or to the
    uniform dimension implied by the matrix size.
    """
    support: Tuple[Vertex, ...]
    hamiltonian: Optional[np.ndarray] = None
    jumps: Tuple[np.ndarray, ...] = ()
    schedule: TimeSchedule = CONSTANT_ONE
    label: str = ""
    site_dims: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        support = tuple(self.support)
        if len(set(support)) != len(support):
            raise DimensionMismatch(f"Term support lists a vertex twice: {support}")
        object.__setattr__(self, "support", support)

        jumps = tuple(np.asarray(L, dtype=complex) for L in self.jumps)
        if self.hamiltonian is None:
            if not jumps:
                raise DimensionMismatch("A term needs a Hamiltonian or at least one jump operator")
            H = np.zeros_like(jumps[0])
        else:
            H = np.asarray(self.hamiltonian, dtype=complex)
        d = H.shape[0]
        for m in (H,) + jumps:
            if m.ndim != 2 or m.shape != (d, d):
                raise DimensionMismatch(f"Term matrices must all be {d}x{d}, got {m.shape}")
        if np.max(np.abs(H - H.conj().T), initial=0.0) > DEFAULT_TOL * max(1.0, np.max(np.abs(H), initial=0.0)):
            raise NotHermitian(f"Hamiltonian of term '{self.label or support}' is not Hermitian")
        object.__setattr__(self, "hamiltonian", (H + H.conj().T) / 2)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "site_dims", self._resolve_site_dims(d))

    def _resolve_site_dims(self, d: int) -> Tuple[int, ...]:
        k = len(self.support)
        if self.site_dims is not None:
            dims = tuple(int(x) for x in self.site_dims)
            if len(dims) != k or int(np.prod(dims, dtype=np.int64)) != d:
                raise DimensionMismatch(f"Site dimensions {dims} do not match support {self.support} and size {d}")
            return dims
        if k == 0:
            if d != 1:
                raise DimensionMismatch(f"A term on the empty support must be 1x1, got {d}x{d}")
            return ()
        per_site = int(round(d ** (1.0 / k)))
        if per_site ** k != d:
            raise DimensionMismatch(f"Matrix size {d} is not a uniform power over {k} sites; pass site_dims")
        return (per_site,) * k

    @property
    def local_dim(self) -> int:
        return self.hamiltonian.shape[0]

    @cached_property
    def dissipator_sum(self) -> np.ndarray:
        """K = sum_mu L_mu† L_mu."""
        K = np.zeros_like(self.hamiltonian)
        for L in self.jumps:
            K += L.conj().T @ L
        return K

    @cached_property
    def dissipator_scalar(self) -> Optional[complex]:
        """k when K = k·1 (dephasing-type jumps), else None."""
        K = self.dissipator_sum
        k = K[0, 0]
        if np.allclose(K, k * np.eye(K.shape[0]), rtol=0.0, atol=1e-14):
            return k
        return None

    @cached_property
    def heisenberg_matrix(self) -> np.ndarray:
        """Local adjoint generator (c = 1) on column-stacked vec(A)."""
        return _local_superoperator(self.hamiltonian, self.jumps, self.dissipator_sum, Picture.HEISENBERG)

    @cached_property
    def schrodinger_matrix(self) -> np.ndarray:
        return _local_superoperator(self.hamiltonian, self.jumps, self.dissipator_sum, Picture.SCHRODINGER)

    def local_matrix(self, picture: Picture) -> np.ndarray:
        return self.heisenberg_matrix if picture == Picture.HEISENBERG else self.schrodinger_matrix

    @cached_property
    def base_norm(self) -> float:
        """Induced spectral-norm of the unscaled adjoint generator."""
        if not self.jumps:
            return hamiltonian_norm(self.hamiltonian)
        key = (self.heisenberg_matrix.tobytes(), self.local_dim)
        if key not in _NORM_CACHE:
            _NORM_CACHE[key] = induced_norm(self.heisenberg_matrix, self.local_dim)
        return _NORM_CACHE[key]

    @property
    def is_generator_zero(self) -> bool:
        return not np.any(np.abs(self.heisenberg_matrix) > DEFAULT_TOL)

    def is_zero(self) -> bool:
        """Identically zero: vanishing generator or a schedule that is zero everywhere."""
        return self.is_generator_zero or self.schedule.is_identically_zero

    def scaled(self, factor: float) -> "LindbladTerm":
        return LindbladTerm(self.support, self.hamiltonian, self.jumps, self.schedule.scaled(factor),
                            self.label, self.site_dims)

    def with_schedule(self, schedule: TimeSchedule) -> "LindbladTerm":
        return LindbladTerm(self.support, self.hamiltonian, self.jumps, schedule, self.label, self.site_dims)

    def __str__(self):
        name = self.label or "term"
        return f"LindbladTerm({name} on {list(self.support)}, jumps={len(self.jumps)})"

    def __repr__(self):
        return self.__str__()


# --- Application on the full space ---

def placement(term: LindbladTerm, g: InteractionGraph) -> Tuple[List[int], List[int]]:
    g.check_vertices(term.support)
    expected = tuple(g.local_dims[v] for v in term.support)
    if expected != term.site_dims:
        raise DimensionMismatch(f"{term} has site dimensions {term.site_dims}, graph declares {expected}")
    return [g.position(v) for v in term.support], g.dims


def act(term: LindbladTerm, coefficient: float, A: np.ndarray, g: InteractionGraph, picture: Picture) -> np.ndarray:
    """coefficient·L_X(A) (Heisenberg) or coefficient·L_X†(A) (Schrödinger) on a dense full-space matrix."""
    if coefficient == 0.0:
        return np.zeros_like(A)
    positions, dims = placement(term, g)
    out = np.zeros_like(A, dtype=complex)
    H = term.hamiltonian
    if np.any(H):
        comm = apply_local_left(A, H, positions, dims) - apply_local_right(A, H, positions, dims)
        out += (1j if picture == Picture.HEISENBERG else -1j) * comm
    for L in term.jumps:
        Ld = L.conj().T
        if picture == Picture.HEISENBERG:
            sandwich = apply_local_right(apply_local_left(A, Ld, positions, dims), L, positions, dims)
        else:
            sandwich = apply_local_right(apply_local_left(A, L, positions, dims), Ld, positions, dims)
        out += 2 * sandwich
    if term.jumps:
        K = term.dissipator_sum
        k_scalar = term.dissipator_scalar
        if k_scalar is not None:
            out -= 2 * k_scalar * A
        else:
            out -= apply_local_left(A, K, positions, dims) + apply_local_right(A, K, positions, dims)
    return coefficient * out


def lindblad_apply(term: LindbladTerm, t: float, rho: GlobalOperator) -> GlobalOperator:
    """Schrödinger-picture action c(t)·(−i[H,ρ] + Σ 2LρL† − L†Lρ − ρL†L)."""
    return rho.with_matrix(act(term, term.schedule(t), rho.matrix, rho.graph, Picture.SCHRODINGER))


def adjoint_apply(term: LindbladTerm, t: float, A: GlobalOperator) -> GlobalOperator:
    """Heisenberg-picture action c(t)·(+i[H,A] + Σ 2L†AL − L†LA − AL†L)."""
    return A.with_matrix(act(term, term.schedule(t), A.matrix, A.graph, Picture.HEISENBERG))


def term_norm(term: LindbladTerm, t: float) -> float:
    coefficient = term.schedule(t)
    if coefficient == 0.0:
        return 0.0
    return abs(coefficient) * term.base_norm


def liouvillian_support(term: LindbladTerm, tol: float = DEFAULT_TOL) -> FrozenSet[Vertex]:
    """
    Smallest subset X of the declared support whose complement lies in the kernel of the adjoint generator.

    Vertices are dropped greedily in support order; each candidate is tested on the matrix-unit basis of
    operators living on the dropped sites.
    """
    if tol <= 0:
        raise ValueError("Support tolerance must be positive")
    if term.is_generator_zero:
        return frozenset()
    local = InteractionGraph(term.support, [], dict(zip(term.support, term.site_dims))) if term.support else None
    S = term.heisenberg_matrix
    threshold = tol * max(1.0, np.linalg.norm(S))
    current = list(term.support)
    for v in term.support:
        candidate = [u for u in current if u != v]
        dropped = [u for u in term.support if u not in candidate]
        if _annihilates(S, local, dropped, threshold):
            current = candidate
    return frozenset(current)


def _annihilates(S: np.ndarray, local: InteractionGraph, sites: List[Vertex], threshold: float) -> bool:
    d = local.dim_of(sites)
    for k in range(d * d):
        unit = np.zeros((d, d), dtype=complex)
        unit[divmod(k, d)] = 1.0
        basis_op = embed(unit, sites, local).matrix
        image = S @ basis_op.reshape(-1, order="F")
        if np.linalg.norm(image) > threshold:
            return False
    return True


# --- Local superoperators and norms ---

def _local_superoperator(H: np.ndarray, jumps: Sequence[np.ndarray], K: np.ndarray, picture: Picture) -> np.ndarray:
    d = H.shape[0]
    I = np.eye(d, dtype=complex)
    comm = np.kron(I, H) - np.kron(H.T, I)
    S = (1j if picture == Picture.HEISENBERG else -1j) * comm
    for L in jumps:
        if picture == Picture.HEISENBERG:
            S = S + 2 * np.kron(L.T, L.conj().T)
        else:
            S = S + 2 * np.kron(L.conj(), L)
    if len(jumps):
        S = S - np.kron(I, K) - np.kron(K.T, I)
    return S


def hamiltonian_norm(H: np.ndarray) -> float:
    """Exact norm of A -> i[H, A]: the spread λmax − λmin of H."""
    eigenvalues = np.linalg.eigvalsh(H)
    return float(eigenvalues[-1] - eigenvalues[0])


def _weyl_unitaries(d: int) -> List[np.ndarray]:
    """Clock-and-shift unitaries, the qudit generalization of the Pauli group."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    out = []
    for a in range(d):
        for b in range(d):
            out.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return out


def induced_norm(S: np.ndarray, d: int, seed: int = 0) -> float:
    """
    Search estimate of sup ‖S(A)‖ over ‖A‖ <= 1, with S acting on column-stacked vec(A).

    The objective is convex, so the supremum is attained on the unitaries. Candidates are the
    clock-and-shift unitaries and seeded Haar-random ones, refined by local search over U·exp(iK).
    The result never exceeds the true norm and may fall short of it by the optimizer tolerance.
    """
    if not np.any(S):
        return 0.0

    def value(U: np.ndarray) -> float:
        return op_norm((S @ U.reshape(-1, order="F")).reshape(d, d, order="F"))

    candidates = _weyl_unitaries(d)
    rng = np.random.default_rng(seed)
    candidates += [unitary_group.rvs(d, random_state=rng) for _ in range(NORM_RANDOM_STARTS)]
    scored = sorted(((value(U), i) for i, U in enumerate(candidates)), reverse=True)
    best = scored[0][0]

    def unpack(theta: np.ndarray) -> np.ndarray:
        G = (theta[: d * d] + 1j * theta[d * d:]).reshape(d, d)
        return (G + G.conj().T) / 2

    for _, i in scored[:NORM_REFINED_STARTS]:
        U0 = candidates[i]
        result = minimize(lambda th: -value(expm(1j * unpack(th)) @ U0), np.zeros(2 * d * d),
                          method="L-BFGS-B", options={"maxiter": NORM_MAX_ITER})
        best = max(best, -float(result.fun))
    logger.debug(f"Induced norm search at d={d}: {best:.12g}")
    return best
