import numpy as np
import pytest

from src.graph.lattices import chain
from src.model.factory import TermFactory
from src.model.liouvillian import assemble
from src.model.schedule import TimeSchedule
from src.lab import pool


@pytest.fixture(autouse=True)
def _no_progress_bars():
    pool.PROGRESS_DISABLED = True


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def factory():
    return TermFactory()


def _heisenberg_dephasing(n: int, J: float = 1.0, gamma: float = 0.05, schedule=None):
    """Heisenberg chain with single-site dephasing, optionally with a schedule on the couplings."""
    factory = TermFactory()
    g = chain(n)
    supports = [tuple(sorted(e)) for e in g.hyperedges]
    terms = factory.build_many("heisenberg_edge", supports, J, schedule or TimeSchedule.constant(1.0))
    if gamma:
        terms += factory.build_many("dephasing_site", [(v,) for v in g.vertices], gamma)
    return assemble(g, terms)


@pytest.fixture
def chain_model():
    return _heisenberg_dephasing


@pytest.fixture
def two_piece_schedule():
    return TimeSchedule.piecewise([(0.0, 0.1, [1.0]), (0.1, 1.0, [0.5, 2.0])])
