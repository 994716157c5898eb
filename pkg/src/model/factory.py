import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.errors import DimensionMismatch, UnknownBuilder
from src.graph.hypergraph import Vertex
from src.operators.paulis import SIGMA_MINUS, X, Y, Z
from src.model.schedule import CONSTANT_ONE, TimeSchedule
from src.model.terms import LindbladTerm

logger = logging.getLogger(__name__)

Builder = Callable[[Sequence[Vertex], float], LindbladTerm]


def _require_sites(name: str, support: Sequence[Vertex], count: int):
    if len(support) != count:
        raise DimensionMismatch(f"Builder '{name}' needs exactly {count} site(s), got {list(support)}")


def _require_rate(name: str, gamma: float):
    if gamma < 0:
        raise ValueError(f"Builder '{name}' needs a non-negative rate, got {gamma}")


def heisenberg_edge(support: Sequence[Vertex], J: float) -> LindbladTerm:
    _require_sites("heisenberg_edge", support, 2)
    H = J * (np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z))
    return LindbladTerm(tuple(support), H, label="heisenberg_edge")


def xy_edge(support: Sequence[Vertex], J: float) -> LindbladTerm:
    _require_sites("xy_edge", support, 2)
    return LindbladTerm(tuple(support), J * (np.kron(X, X) + np.kron(Y, Y)), label="xy_edge")


def ising_edge(support: Sequence[Vertex], J: float) -> LindbladTerm:
    _require_sites("ising_edge", support, 2)
    return LindbladTerm(tuple(support), J * np.kron(Z, Z), label="ising_edge")


def transverse_field_site(support: Sequence[Vertex], h: float) -> LindbladTerm:
    _require_sites("transverse_field_site", support, 1)
    return LindbladTerm(tuple(support), h * X, label="transverse_field_site")


def longitudinal_field_site(support: Sequence[Vertex], h: float) -> LindbladTerm:
    _require_sites("longitudinal_field_site", support, 1)
    return LindbladTerm(tuple(support), h * Z, label="longitudinal_field_site")


def dephasing_site(support: Sequence[Vertex], gamma: float) -> LindbladTerm:
    """Single jump sqrt(gamma)·Z; off-diagonals decay as exp(-4·gamma·t)."""
    _require_sites("dephasing_site", support, 1)
    _require_rate("dephasing_site", gamma)
    return LindbladTerm(tuple(support), None, (np.sqrt(gamma) * Z,), label="dephasing_site")


def amplitude_damping_site(support: Sequence[Vertex], gamma: float) -> LindbladTerm:
    _require_sites("amplitude_damping_site", support, 1)
    _require_rate("amplitude_damping_site", gamma)
    return LindbladTerm(tuple(support), None, (np.sqrt(gamma) * SIGMA_MINUS,), label="amplitude_damping_site")


def hopping_edge(support: Sequence[Vertex], J: float) -> LindbladTerm:
    """-J·(f†_j f_k + h.c.) for neighbouring chain sites, mapped through Jordan-Wigner on the pair."""
    _require_sites("hopping_edge", support, 2)
    from src.fermion.jordan_wigner import hopping, jw_map

    H = jw_map(hopping(1, 2, -J), 2).matrix
    return LindbladTerm(tuple(support), H, label="hopping_edge")


def random_term(support: Sequence[Vertex], rng: np.random.Generator, site_dims: Optional[Sequence[int]] = None,
                n_jumps: int = 1, scale: float = 1.0) -> LindbladTerm:
    """Gaussian Hamiltonian and jumps on `support`, used by CPTP audits."""
    dims = tuple(site_dims) if site_dims is not None else (2,) * len(support)
    d = int(np.prod(dims, dtype=np.int64))

    def ginibre():
        return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))

    G = ginibre()
    H = scale * (G + G.conj().T) / (2 * np.sqrt(d))
    jumps = tuple(np.sqrt(scale) * ginibre() / (2 * np.sqrt(d)) for _ in range(n_jumps))
    return LindbladTerm(tuple(support), H, jumps, label="random", site_dims=dims)


class TermFactory:
    """Registry of named term builders referenced from model files."""

    def __init__(self):
        self._builders: Dict[str, Builder] = {
            "heisenberg_edge": heisenberg_edge,
            "xy_edge": xy_edge,
            "ising_edge": ising_edge,
            "tfim_site": transverse_field_site,
            "transverse_field_site": transverse_field_site,
            "longitudinal_field_site": longitudinal_field_site,
            "dephasing_site": dephasing_site,
            "amplitude_damping_site": amplitude_damping_site,
            "hopping_edge": hopping_edge,
        }

    def names(self) -> List[str]:
        return sorted(self._builders)

    def register(self, name: str, builder: Builder):
        self._builders[name] = builder

    def get_builder(self, name: str) -> Builder:
        try:
            return self._builders[name]
        except KeyError:
            raise UnknownBuilder(f"Unknown term builder '{name}'; known: {', '.join(self.names())}") from None

    def build(self, name: str, support: Sequence[Vertex], coefficient: float = 1.0,
              schedule: TimeSchedule = CONSTANT_ONE) -> LindbladTerm:
        term = self.get_builder(name)(support, coefficient)
        if schedule is not CONSTANT_ONE:
            term = term.with_schedule(schedule)
        return term

    def build_many(self, name: str, supports: Sequence[Sequence[Vertex]], coefficient: float = 1.0,
                   schedule: TimeSchedule = CONSTANT_ONE) -> List[LindbladTerm]:
        terms = [self.build(name, support, coefficient, schedule) for support in supports]
        logger.debug(f"Built {len(terms)} '{name}' terms")
        return terms
