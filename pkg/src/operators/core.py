import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Union

import numpy as np

from src.errors import DimensionMismatch, GraphError, NotAState, NotHermitian, OperatorError, TooLarge
from src.graph.hypergraph import InteractionGraph, Vertex

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_OBSERVABLE_DIM = 2 ** 12


@dataclass(frozen=True, eq=False)
class GlobalOperator:
    """Dense operator on the full tensor-product space of `graph`, optionally tagged with its support."""
    matrix: np.ndarray
    graph: InteractionGraph
    declared_support: Optional[FrozenSet[Vertex]] = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        dim = self.graph.hilbert_dim
        if dim > MAX_OBSERVABLE_DIM:
            raise TooLarge(f"Hilbert dimension {dim} exceeds the dense cap {MAX_OBSERVABLE_DIM}")
        if matrix.shape != (dim, dim):
            raise DimensionMismatch(f"Operator shape {matrix.shape} does not match Hilbert dimension {dim}")
        object.__setattr__(self, "matrix", matrix)
        if self.declared_support is not None:
            object.__setattr__(self, "declared_support", frozenset(self.declared_support))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def with_matrix(self, matrix: np.ndarray, support: Optional[Iterable[Vertex]] = None) -> "GlobalOperator":
        return GlobalOperator(matrix, self.graph, frozenset(support) if support is not None else None)

    def adjoint(self) -> "GlobalOperator":
        return GlobalOperator(self.matrix.conj().T, self.graph, self.declared_support)

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol * max(1.0, np.max(np.abs(self.matrix), initial=0.0))

    def _check(self, other: "GlobalOperator"):
        if other.dim != self.dim:
            raise DimensionMismatch(f"Operator dimensions differ: {self.dim} vs {other.dim}")

    def _merged_support(self, other: "GlobalOperator"):
        if self.declared_support is None or other.declared_support is None:
            return None
        return self.declared_support | other.declared_support

    def __add__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._check(other)
        return GlobalOperator(self.matrix + other.matrix, self.graph, self._merged_support(other))

    def __sub__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._check(other)
        return GlobalOperator(self.matrix - other.matrix, self.graph, self._merged_support(other))

    def __neg__(self) -> "GlobalOperator":
        return GlobalOperator(-self.matrix, self.graph, self.declared_support)

    def __mul__(self, scalar: complex) -> "GlobalOperator":
        return GlobalOperator(scalar * self.matrix, self.graph, self.declared_support)

    __rmul__ = __mul__

    def __matmul__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._check(other)
        return GlobalOperator(self.matrix @ other.matrix, self.graph, self._merged_support(other))

    def __str__(self):
        support = sorted(self.declared_support, key=str) if self.declared_support is not None else "?"
        return f"GlobalOperator(D={self.dim}, support={support})"

    def __repr__(self):
        return self.__str__()


class StateOperator(GlobalOperator):
    """A density matrix: Hermitian, unit trace and positive semidefinite within DEFAULT_TOL."""

    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        if np.linalg.norm(m - m.conj().T, 2) > DEFAULT_TOL:
            raise NotAState("Density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > DEFAULT_TOL:
            raise NotAState(f"Density matrix has trace {np.trace(m).real:.12f}, expected 1")
        min_eig = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if min_eig < -DEFAULT_TOL:
            raise NotAState(f"Density matrix has negative eigenvalue {min_eig:.3e}")

    @classmethod
    def from_operator(cls, op: GlobalOperator) -> "StateOperator":
        return cls(op.matrix, op.graph, op.declared_support)


# --- Tensor-factor helpers ---

def _positions(g: InteractionGraph, support: Sequence[Vertex]) -> List[int]:
    return [g.position(v) for v in support]


def apply_local_left(A: np.ndarray, local: np.ndarray, positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """(M_S ⊗ 1) A without building the embedded matrix; factor order of `local` follows `positions`."""
    k = len(positions)
    if k == 0:
        return local[0, 0] * A
    T = A.reshape(list(dims) * 2)
    loc = local.reshape([dims[p] for p in positions] * 2)
    R = np.tensordot(loc, T, axes=(list(range(k, 2 * k)), list(positions)))
    R = np.moveaxis(R, list(range(k)), list(positions))
    return R.reshape(A.shape)


def apply_local_right(A: np.ndarray, local: np.ndarray, positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """A (M_S ⊗ 1) without building the embedded matrix."""
    n, k = len(dims), len(positions)
    if k == 0:
        return local[0, 0] * A
    T = A.reshape(list(dims) * 2)
    loc = local.reshape([dims[p] for p in positions] * 2)
    col_axes = [n + p for p in positions]
    R = np.tensordot(T, loc, axes=(col_axes, list(range(k))))
    R = np.moveaxis(R, list(range(2 * n - k, 2 * n)), col_axes)
    return R.reshape(A.shape)


# --- Operations ---

def embed(local_matrix: np.ndarray, support: Sequence[Vertex], g: InteractionGraph) -> GlobalOperator:
    """A_X ⊗ 1 on the full space; `local_matrix` factors follow the order of `support`."""
    support = list(support)
    g.check_vertices(support)
    if len(set(support)) != len(support):
        raise GraphError(f"Support lists a vertex twice: {support}")
    local = np.asarray(local_matrix, dtype=complex)
    d_support = g.dim_of(support)
    if local.shape != (d_support, d_support):
        raise DimensionMismatch(f"Local matrix shape {local.shape} does not match support dimension {d_support}")

    in_support = set(support)
    rest = [v for v in g.vertices if v not in in_support]
    full = np.kron(local, np.eye(g.dim_of(rest)))
    order = support + rest
    dims = [g.local_dims[v] for v in order]
    n = len(order)
    perm = [order.index(v) for v in g.vertices]
    D = g.hilbert_dim
    T = full.reshape(dims * 2).transpose(perm + [n + p for p in perm])
    return GlobalOperator(T.reshape(D, D), g, frozenset(support))


def identity(g: InteractionGraph) -> GlobalOperator:
    return GlobalOperator(np.eye(g.hilbert_dim, dtype=complex), g, frozenset())


def op_norm(A: Union[GlobalOperator, np.ndarray]) -> float:
    """Spectral norm (largest singular value)."""
    m = A.matrix if isinstance(A, GlobalOperator) else np.asarray(A)
    if m.size == 0:
        return 0.0
    if np.allclose(m, m.conj().T, rtol=0.0, atol=1e-14):
        return float(np.max(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.linalg.norm(m, 2))


def hs_inner(A: GlobalOperator, B: GlobalOperator) -> complex:
    """Hilbert-Schmidt inner product Tr(A† B)."""
    a = A.matrix if isinstance(A, GlobalOperator) else np.asarray(A)
    b = B.matrix if isinstance(B, GlobalOperator) else np.asarray(B)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Operator shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def anticommutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B + B @ A


def partial_trace_restriction(A: GlobalOperator, X: Iterable[Vertex]) -> np.ndarray:
    """Normalized partial trace over the complement of X; factors in declared vertex order."""
    g = A.graph
    keep = _positions(g, g.ordered(X))
    rest = [p for p in range(len(g.vertices)) if p not in set(keep)]
    dims = g.dims
    n = len(dims)
    d_keep = int(np.prod([dims[p] for p in keep], dtype=np.int64))
    d_rest = int(np.prod([dims[p] for p in rest], dtype=np.int64))
    T = A.matrix.reshape(dims * 2).transpose(keep + rest + [n + p for p in keep] + [n + p for p in rest])
    T = T.reshape(d_keep, d_rest, d_keep, d_rest)
    return np.einsum("arbr->ab", T) / d_rest


def _removable(A: GlobalOperator, candidate: List[Vertex], threshold: float) -> bool:
    g = A.graph
    restricted = embed(partial_trace_restriction(A, candidate), candidate, g).matrix
    residual = A.matrix - restricted
    frob = np.linalg.norm(residual)
    if frob <= threshold:
        return True
    if frob / np.sqrt(A.dim) > threshold:
        return False
    return op_norm(residual) <= threshold


def support_of(A: GlobalOperator, tol: float = DEFAULT_TOL) -> FrozenSet[Vertex]:
    """
    Smallest vertex set X with ‖A − embed(restriction(A, X), X)‖ <= tol·‖A‖.

    Sites are tested for removability one at a time in declared vertex order.
    """
    if tol <= 0:
        raise ValueError("Support tolerance must be positive")
    g = A.graph
    norm = op_norm(A)
    if norm == 0.0:
        return frozenset()
    threshold = tol * norm
    current = list(g.vertices)
    for v in g.vertices:
        candidate = [u for u in current if u != v]
        if _removable(A, candidate, threshold):
            current = candidate
    return frozenset(current)


def expectation(rho: GlobalOperator, A: GlobalOperator, tol: float = DEFAULT_TOL) -> float:
    """Tr(ρA) for Hermitian A; the imaginary part is checked and discarded."""
    if rho.dim != A.dim:
        raise DimensionMismatch(f"State dimension {rho.dim} does not match observable dimension {A.dim}")
    if not A.is_hermitian(tol):
        raise NotHermitian("Expectation values are only defined for Hermitian observables")
    value = complex(np.einsum("ij,ji->", rho.matrix, A.matrix))
    if abs(value.imag) > tol * max(1.0, abs(value)):
        raise OperatorError(f"Expectation value has imaginary part {value.imag:.3e}")
    return value.real


def site_reductions(rho: GlobalOperator) -> List[np.ndarray]:
    return [partial_trace_restriction(rho, [v]) * rho.graph.dim_of([u for u in rho.graph.vertices if u != v])
            for v in rho.graph.vertices]


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def product_state(g: InteractionGraph, local_states: Sequence[np.ndarray]) -> StateOperator:
    """⊗_j ρ_j in vertex order."""
    if len(local_states) != len(g.vertices):
        raise DimensionMismatch(f"Expected {len(g.vertices)} local states, got {len(local_states)}")
    return StateOperator(kron_all(local_states), g, frozenset(g.vertices))


def is_product_state(rho: GlobalOperator, tol: float = 1e-9) -> bool:
    """True when ρ equals the tensor product of its single-site reductions."""
    rebuilt = kron_all(site_reductions(rho))
    return op_norm(rho.matrix - rebuilt) <= tol


def random_hermitian(g: InteractionGraph, rng: np.random.Generator, scale: float = 1.0) -> GlobalOperator:
    D = g.hilbert_dim
    G = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    H = (G + G.conj().T) / 2
    return GlobalOperator(scale * H / op_norm(H), g)


def random_state(g: InteractionGraph, rng: np.random.Generator, rank: Optional[int] = None) -> StateOperator:
    """Ginibre-ensemble density matrix."""
    D = g.hilbert_dim
    k = rank or D
    G = rng.normal(size=(D, k)) + 1j * rng.normal(size=(D, k))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return StateOperator(rho / np.trace(rho).real, g)
