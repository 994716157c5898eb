import math

import numpy as np
import pytest

from src.errors import BadInterval, ModelError, TooLarge
from src.graph.lattices import chain
from src.IR.models import Picture
from src.model.factory import dephasing_site, longitudinal_field_site
from src.model.liouvillian import assemble
from src.model.schedule import TimeSchedule
from src.operators.core import StateOperator, hs_inner, op_norm, random_hermitian, random_state
from src.operators.paulis import pauli_on
from src.propagation.integrator import (
    integrate,
    propagate_observable,
    propagate_state,
    rk4_fixed,
    spectral_norm_bound,
)
from src.propagation.superoperator import (
    adjoint_consistency_check,
    choi_min_eigenvalue,
    exact_propagator,
    forward_heisenberg,
    heisenberg_propagator_matrix,
    propagator_matrix,
    trace_preservation_error,
    transpose_map,
    unvec,
    vec,
)


@pytest.fixture
def dephased_qubit():
    return assemble(chain(1), [dephasing_site((1,), 0.2)])


def test_rk4_on_exponential_growth():
    y = rk4_fixed(lambda t, y: y, np.ones((1, 1)), 0.0, 1.0, 20)
    assert y[0, 0] == pytest.approx(math.e, abs=1e-6)
    back = rk4_fixed(lambda t, y: y, y, 1.0, 0.0, 20)
    assert back[0, 0] == pytest.approx(1.0, abs=1e-6)


def test_dephasing_coherence_decay(dephased_qubit):
    rho = StateOperator(np.full((2, 2), 0.5), dephased_qubit.graph)
    t = 0.7
    out = propagate_state(dephased_qubit, rho, 0.0, t)
    assert out.matrix[0, 1] == pytest.approx(0.5 * math.exp(-4 * 0.2 * t), abs=1e-9)
    assert out.matrix[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_dephasing_observable_decay(dephased_qubit):
    X = pauli_on("X", 1, dephased_qubit.graph)
    out = propagate_observable(dephased_qubit, X, 0.2, 0.9)
    assert np.allclose(out.matrix, math.exp(-4 * 0.2 * 0.7) * X.matrix, atol=1e-9)
    assert out.declared_support is None


def test_reversed_interval_is_rejected(dephased_qubit):
    X = pauli_on("X", 1, dephased_qubit.graph)
    with pytest.raises(BadInterval):
        propagate_observable(dephased_qubit, X, 1.0, 0.5)


def test_zero_length_interval_is_identity(chain_model, rng):
    L = chain_model(3)
    A = rng.normal(size=(8, 8))
    assert np.array_equal(integrate(L, A, 0.4, 0.4, Picture.HEISENBERG), A)


def test_pictures_agree_on_time_dependent_chain(chain_model, rng, two_piece_schedule):
    L = chain_model(3, schedule=two_piece_schedule)
    rho = random_state(L.graph, rng)
    A = random_hermitian(L.graph, rng)
    schrodinger = hs_inner(propagate_state(L, rho, 0.0, 0.2), A)
    heisenberg = hs_inner(rho, propagate_observable(L, A, 0.0, 0.2))
    assert schrodinger == pytest.approx(heisenberg, abs=1e-8)


def test_integration_matches_exact_propagator(chain_model, two_piece_schedule):
    L = chain_model(2, schedule=two_piece_schedule)
    T = propagator_matrix(L, 0.0, 0.25)
    exact = exact_propagator(L, 0.0, 0.25)
    assert np.linalg.norm(T.matrix - exact.matrix) < 1e-8


def test_exact_propagators_compose(chain_model, two_piece_schedule):
    L = chain_model(2, schedule=two_piece_schedule)
    whole = exact_propagator(L, 0.0, 0.3)
    split = exact_propagator(L, 0.05, 0.3) @ exact_propagator(L, 0.0, 0.05)
    assert np.linalg.norm(whole.matrix - split.matrix) < 1e-10
    heisenberg = exact_propagator(L, 0.0, 0.3, Picture.HEISENBERG)
    assert np.linalg.norm(heisenberg.matrix - whole.matrix.conj().T) < 1e-10


def test_exact_propagator_needs_piecewise_constant_schedules(chain_model):
    ramp = TimeSchedule.piecewise([(0.0, 1.0, [0.0, 1.0])])
    L = chain_model(2, schedule=ramp)
    with pytest.raises(ModelError):
        exact_propagator(L, 0.0, 0.5)


def test_propagator_is_cptp(chain_model, two_piece_schedule):
    L = chain_model(2, schedule=two_piece_schedule)
    T = propagator_matrix(L, 0.0, 0.2)
    assert choi_min_eigenvalue(T) > -1e-9
    assert trace_preservation_error(T) < 1e-9


def test_transpose_is_not_completely_positive():
    T = transpose_map(2)
    assert choi_min_eigenvalue(T) == pytest.approx(-1.0)
    assert trace_preservation_error(T) == 0.0


def test_adjoint_consistency(chain_model, two_piece_schedule):
    L = chain_model(2, schedule=two_piece_schedule)
    assert adjoint_consistency_check(L, 0.0, 0.2) < 1e-8


def test_forward_heisenberg_for_constant_generators(chain_model, rng):
    L = chain_model(3)
    A = random_hermitian(L.graph, rng)
    forward = forward_heisenberg(L, A, 0.0, 0.3)
    backward = propagate_observable(L, A, 0.0, 0.3)
    assert np.allclose(forward.matrix, backward.matrix, atol=1e-9)


def test_materialization_cap(chain_model):
    with pytest.raises(TooLarge):
        propagator_matrix(chain_model(8), 0.0, 0.1)


def test_column_stacking(rng):
    A = rng.normal(size=(3, 3))
    v = vec(A)
    assert v[1 + 3 * 2] == A[1, 2]
    assert np.array_equal(unvec(v), A)


def test_rk4_error_shrinks_with_the_fourth_power_of_the_step():
    exact = math.exp(math.sin(1.0))
    errors = [abs(rk4_fixed(lambda t, y: math.cos(t) * y, np.ones((1, 1)), 0.0, 1.0, n)[0, 0] - exact)
              for n in (8, 16)]
    assert 2 ** 4 / 1.5 <= errors[0] / errors[1] <= 2 ** 4 * 1.5


def test_step_doubling_estimate_bounds_the_spectral_norm(rng):
    for _ in range(5):
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert spectral_norm_bound(m) >= op_norm(m) * (1 - 1e-12)
    assert spectral_norm_bound(np.eye(4)) == pytest.approx(1.0)


def test_half_turn_about_z_flips_x():
    L = assemble(chain(1), [longitudinal_field_site((1,), 0.5)])
    X = pauli_on("X", 1, L.graph)
    out = propagate_observable(L, X, 0.0, math.pi)
    assert np.allclose(out.matrix, -X.matrix, atol=1e-8)


def test_unitary_evolution_preserves_purity(chain_model, rng, two_piece_schedule):
    L = chain_model(3, gamma=0.0, schedule=two_piece_schedule)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    rho = StateOperator(np.outer(psi, psi.conj()), L.graph)
    out = propagate_state(L, rho, 0.0, 0.5)
    assert np.trace(out.matrix @ out.matrix).real == pytest.approx(1.0, abs=1e-9)


def test_integrated_propagators_compose_under_polynomial_schedules(factory):
    g = chain(3)
    coupling = TimeSchedule.piecewise([(0.0, 1.0, [1.0, 2.0, -1.5])])
    damping = TimeSchedule.piecewise([(0.0, 1.0, [0.2, 0.0, 1.0])])
    terms = factory.build_many("heisenberg_edge", [(1, 2), (2, 3)], 1.0, coupling)
    terms += factory.build_many("amplitude_damping_site", [(1,), (2,), (3,)], 0.3, damping)
    L = assemble(g, terms)
    s, r, t = 0.0, 0.15, 0.3

    whole = propagator_matrix(L, s, t)
    split = propagator_matrix(L, r, t) @ propagator_matrix(L, s, r)
    assert np.linalg.norm(whole.matrix - split.matrix, 2) <= 1e-8

    backward = heisenberg_propagator_matrix(L, s, t)
    backward_split = heisenberg_propagator_matrix(L, s, r) @ heisenberg_propagator_matrix(L, r, t)
    assert np.linalg.norm(backward.matrix - backward_split.matrix, 2) <= 1e-8
