"""
Jordan-Wigner representation of fermions on an open chain with sites 1..N.

w_{2j-1} = X_j ∏_{j'<j} Z_{j'},  w_{2j} = Y_j ∏_{j'<j} Z_{j'},  f_j = (w_{2j-1} − i w_{2j}) / 2.
With this convention f_j†f_j = (1 + Z_j)/2, so the occupied single-site state is |0⟩.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import IndexOutOfRange, OddParity
from src.graph.hypergraph import InteractionGraph
from src.graph.lattices import chain
from src.IR.models import Parity
from src.operators.core import GlobalOperator
from src.operators.paulis import I2, X, Y, Z

logger = logging.getLogger(__name__)

Factor = Tuple[int, bool]


@dataclass(frozen=True)
class FermionMonomial:
    """coefficient · c_1 c_2 ... with each c either f_j (dagger=False) or f_j† (dagger=True), in the given order."""
    factors: Tuple[Factor, ...] = ()
    coefficient: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((int(j), bool(d)) for j, d in self.factors))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def from_signed(cls, signed: Sequence[int], coefficient: complex = 1.0) -> "FermionMonomial":
        """+j is f_j†, −j is f_j."""
        if any(j == 0 for j in signed):
            raise IndexOutOfRange("Site 0 has no sign; sites are numbered from 1")
        return cls(tuple((abs(j), j > 0) for j in signed), coefficient)

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def sites(self) -> List[int]:
        return sorted({j for j, _ in self.factors})

    def adjoint(self) -> "FermionMonomial":
        return FermionMonomial(tuple((j, not d) for j, d in reversed(self.factors)), self.coefficient.conjugate())

    def __mul__(self, other: "FermionMonomial") -> "FermionMonomial":
        return FermionMonomial(self.factors + other.factors, self.coefficient * other.coefficient)

    def __str__(self):
        ops = " ".join(f"f{j}{'†' if d else ''}" for j, d in self.factors) or "1"
        return f"({self.coefficient:g}) {ops}"


@dataclass(frozen=True)
class FermionPolynomial:
    monomials: Tuple[FermionMonomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "monomials", tuple(self.monomials))

    @classmethod
    def of(cls, *monomials: FermionMonomial) -> "FermionPolynomial":
        return cls(tuple(monomials))

    @property
    def parity(self) -> Parity:
        return parity_of(self)

    @property
    def sites(self) -> List[int]:
        return sorted({j for m in self.monomials for j in m.sites})

    def adjoint(self) -> "FermionPolynomial":
        return FermionPolynomial(tuple(m.adjoint() for m in self.monomials))

    def __add__(self, other: "FermionPolynomial") -> "FermionPolynomial":
        return FermionPolynomial(self.monomials + other.monomials)

    def __mul__(self, other: Union["FermionPolynomial", complex]) -> "FermionPolynomial":
        if isinstance(other, FermionPolynomial):
            return FermionPolynomial(tuple(a * b for a in self.monomials for b in other.monomials))
        return FermionPolynomial(tuple(FermionMonomial(m.factors, m.coefficient * other) for m in self.monomials))

    def __rmul__(self, scalar: complex) -> "FermionPolynomial":
        return self * scalar

    def __neg__(self) -> "FermionPolynomial":
        return self * -1

    def __str__(self):
        return " + ".join(str(m) for m in self.monomials) or "0"

    def __repr__(self):
        return f"FermionPolynomial({self})"


def parity_of(poly: FermionPolynomial) -> Parity:
    """EVEN iff every monomial has an even number of factors; the empty polynomial is even."""
    odd = {m.degree % 2 for m in poly.monomials}
    if odd <= {0}:
        return Parity.EVEN
    if odd == {1}:
        return Parity.ODD
    return Parity.MIXED


# --- Spin-chain matrices ---

@lru_cache(maxsize=16)
def chain_graph(N: int) -> InteractionGraph:
    return chain(N)


def _check_index(j: int, upper: int, what: str):
    if not 1 <= j <= upper:
        raise IndexOutOfRange(f"{what} index {j} outside 1..{upper}")


@lru_cache(maxsize=256)
def _majorana_matrix(k: int, N: int) -> np.ndarray:
    j = (k + 1) // 2
    factors = [Z] * (j - 1) + [X if k % 2 == 1 else Y] + [I2] * (N - j)
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    out.setflags(write=False)
    return out


def majorana(k: int, N: int) -> GlobalOperator:
    """w_k on the N-site chain, 1 <= k <= 2N."""
    _check_index(k, 2 * N, "Majorana")
    return GlobalOperator(_majorana_matrix(k, N), chain_graph(N), frozenset(range(1, (k + 1) // 2 + 1)))


def _fermion_matrix(j: int, dagger: bool, N: int) -> np.ndarray:
    w_odd, w_even = _majorana_matrix(2 * j - 1, N), _majorana_matrix(2 * j, N)
    return 0.5 * (w_odd + 1j * w_even) if dagger else 0.5 * (w_odd - 1j * w_even)


def fermion_op(j: int, dagger: bool, N: int) -> GlobalOperator:
    """f_j or f_j†."""
    _check_index(j, N, "Site")
    return GlobalOperator(_fermion_matrix(j, dagger, N), chain_graph(N), frozenset(range(1, j + 1)))


def _declared_support(poly: FermionPolynomial, parity: Parity) -> Optional[frozenset]:
    sites = poly.sites
    if not sites:
        return frozenset()
    if parity == Parity.EVEN:
        spans = set()
        for m in poly.monomials:
            if m.sites:
                spans.update(range(m.sites[0], m.sites[-1] + 1))
        return frozenset(spans)
    return frozenset(range(1, sites[-1] + 1))


def jw_map(poly: FermionPolynomial, N: int, allow_odd: bool = False) -> GlobalOperator:
    """Spin-chain matrix of the polynomial, multiplying factors in the order given."""
    parity = parity_of(poly)
    if parity != Parity.EVEN and not allow_odd:
        raise OddParity(f"Polynomial {poly} is {parity.value}; physical observables must be even")
    D = 2 ** N
    out = np.zeros((D, D), dtype=complex)
    for m in poly.monomials:
        product = np.eye(D, dtype=complex)
        for j, dagger in m.factors:
            _check_index(j, N, "Site")
            product = product @ _fermion_matrix(j, dagger, N)
        out += m.coefficient * product
    return GlobalOperator(out, chain_graph(N), _declared_support(poly, parity))


# --- Polynomial builders ---

def creation(j: int) -> FermionPolynomial:
    return FermionPolynomial.of(FermionMonomial(((j, True),)))


def annihilation(j: int) -> FermionPolynomial:
    return FermionPolynomial.of(FermionMonomial(((j, False),)))


def number_op(j: int) -> FermionPolynomial:
    """n_j = f_j† f_j."""
    return FermionPolynomial.of(FermionMonomial(((j, True), (j, False))))


def hopping(j: int, k: int, amplitude: complex = 1.0) -> FermionPolynomial:
    """amplitude·f_j† f_k + h.c."""
    forward = FermionMonomial(((j, True), (k, False)), amplitude)
    return FermionPolynomial.of(forward, forward.adjoint())


def density_density(j: int, k: int, U: float = 1.0) -> FermionPolynomial:
    return U * (number_op(j) * number_op(k))


def hopping_chain(N: int, J: float = 1.0, mu: float = 0.0) -> List[Tuple[Tuple[int, ...], FermionPolynomial]]:
    """H = −J Σ (f_j† f_{j+1} + h.c.) − mu Σ n_j as (support, polynomial) terms."""
    terms = [((j, j + 1), hopping(j, j + 1, -J)) for j in range(1, N)]
    if mu:
        terms += [((j,), -mu * number_op(j)) for j in range(1, N + 1)]
    return terms


def total_number(N: int) -> GlobalOperator:
    return jw_map(polynomial_sum(number_op(j) for j in range(1, N + 1)), N)


def one_particle_spectrum(H: GlobalOperator, N: int, tol: float = 1e-9) -> np.ndarray:
    """Eigenvalues of H restricted to the one-fermion sector (JW basis states with exactly one occupied site)."""
    occupation = np.real(np.diag(total_number(N).matrix))
    sector = np.flatnonzero(np.abs(occupation - 1.0) < tol)
    block = H.matrix[np.ix_(sector, sector)]
    return np.linalg.eigvalsh((block + block.conj().T) / 2)


def hopping_matrix(N: int, J: float = 1.0, mu: float = 0.0) -> np.ndarray:
    """Single-particle matrix h with H = Σ h_jk f_j† f_k."""
    h = -mu * np.eye(N)
    for j in range(N - 1):
        h[j, j + 1] = h[j + 1, j] = -J
    return h


def hopping_matrix_oracle(N: int, J: float = 1.0, mu: float = 0.0) -> np.ndarray:
    """Independent one-particle spectrum: eigenvalues of the N×N hopping matrix."""
    return np.linalg.eigvalsh(hopping_matrix(N, J, mu))


def hopping_chain_closed_form(N: int, J: float = 1.0) -> np.ndarray:
    """−2J cos(πq/(N+1)), q = 1..N, sorted."""
    q = np.arange(1, N + 1)
    return np.sort(-2 * J * np.cos(np.pi * q / (N + 1)))


def polynomial_sum(polys: Iterable[FermionPolynomial]) -> FermionPolynomial:
    total = FermionPolynomial()
    for p in polys:
        total = total + p
    return total
