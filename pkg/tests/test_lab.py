import math

import numpy as np
import pytest

from src.errors import OperatorError
from src.graph.lattices import chain
from src.IR.models import BoundParameters, ParameterSource
from src.lab import pool
from src.lab.covariance import covariance, covariance_cone_experiment
from src.lab.fitting import NO_FIT, log_linear_fit, log_log_fit, thresholds
from src.lab.leakage import (
    commutator_leakage,
    commutator_term,
    default_bound_parameters,
    leakage_series,
    lr_envelope,
    perturbation_leakage,
    signal_leakage,
)
from src.lab.trotter import trotter_error, trotter_error_series, trotter_evolve, trotter_size_scan
from src.lab.truncation import buffer_distance, truncation_envelope, truncation_error_series
from src.model.factory import TermFactory
from src.model.liouvillian import assemble
from src.operators.core import StateOperator, embed, product_state, random_state
from src.operators.paulis import Z, pauli_on
from src.propagation.integrator import propagate_observable

PLUS = np.full((2, 2), 0.5)


def staggered_z(g):
    total = None
    for j, v in enumerate(g.vertices):
        term = (-1) ** j * pauli_on("Z", v, g)
        total = term if total is None else total + term
    return total


# --- Envelopes and parameters ---

def test_lr_envelope():
    p = BoundParameters(v=2.0, C=3.0)
    assert lr_envelope(p, 1.0, 2.0, 3, 0.5) == pytest.approx(6.0 * math.exp(1.0 - 3))
    assert lr_envelope(p, 1.0, 1.0, math.inf, 0.5) == 0.0
    with pytest.raises(ValueError):
        lr_envelope(p, 1.0, 1.0, 1, -0.1)


def test_bound_parameters_must_be_positive():
    with pytest.raises(ValueError):
        BoundParameters(v=0.0, C=1.0)


def test_default_bound_parameters(chain_model):
    L = chain_model(4)
    p = default_bound_parameters(L, {1}, {3, 4})
    assert p.v == pytest.approx(math.e * L.Z * L.b)
    assert p.C == 8.0
    assert p.source == ParameterSource.DEFAULT


def test_truncation_envelope_and_buffer():
    p = BoundParameters(v=1.0, C=1.0)
    assert truncation_envelope(p, 2.0, 3, 1, 2.0, 0.5, 1.0) == pytest.approx((4 / 3) * math.exp(0.5 - 2))
    g = chain(5)
    assert buffer_distance(g, {3}, {2, 3, 4}) == 2
    assert math.isinf(buffer_distance(g, {3}, g.vertices))


# --- Leakage ---

def test_leakage_vanishes_at_equal_times(chain_model):
    L = chain_model(4)
    A, B = pauli_on("X", 1, L.graph), pauli_on("Z", 3, L.graph)
    assert commutator_leakage(L, A, B, 0.3, 0.3) == 0.0


def test_leakage_series_decays_with_distance(chain_model):
    L = chain_model(5)
    A = pauli_on("X", 1, L.graph)
    observables = [pauli_on("Z", j, L.graph) for j in (5, 3, 2, 4)]
    report = leakage_series(L, A, observables, 0.0, 0.2)
    assert report.abscissae == [1.0, 2.0, 3.0, 4.0]
    assert all(b < a for a, b in zip(report.measured, report.measured[1:]))
    assert report.verdict["positive"]
    assert report.verdict["below_envelope"]
    assert report.parameters["bound"]["source"] == "default"


def test_leakage_series_rejects_repeated_distances(chain_model):
    L = chain_model(4)
    A = pauli_on("X", 2, L.graph)
    with pytest.raises(ValueError):
        leakage_series(L, A, [pauli_on("Z", 1, L.graph), pauli_on("Z", 3, L.graph)], 0.0, 0.1)


def test_anticommutator_flags_apply_per_observable(chain_model):
    L = chain_model(4)
    A = pauli_on("X", 1, L.graph)
    observables = [pauli_on("Z", 3, L.graph), pauli_on("Z", 4, L.graph)]
    report = leakage_series(L, A, observables, 0.1, 0.1, anticommute=[True, False])
    assert report.measured == pytest.approx([2.0, 0.0])
    with pytest.raises(ValueError):
        leakage_series(L, A, observables, 0.1, 0.1, anticommute=[True])


def test_commutator_as_perturbation(chain_model):
    L = chain_model(3)
    A = pauli_on("X", 1, L.graph)
    B = pauli_on("Z", 3, L.graph)
    K = commutator_term(Z, (3,))
    assert perturbation_leakage(L, A, K, 0.0, 0.2) == pytest.approx(commutator_leakage(L, A, B, 0.0, 0.2),
                                                                     rel=1e-9)


def test_signal_needs_time_to_arrive(chain_model):
    L = chain_model(4)
    rho0 = product_state(L.graph, [PLUS] * 4)
    flipped = embed(Z, [1], L.graph).matrix
    rho1 = rho0.with_matrix(flipped @ rho0.matrix @ flipped)
    B = pauli_on("X", 4, L.graph)
    assert signal_leakage(L, rho0, rho1, B, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert signal_leakage(L, rho0, rho1, B, 0.0, 0.5) > 0.0


# --- Truncation ---

def test_truncation_error_shrinks_with_buffer(chain_model):
    L = chain_model(6)
    A = pauli_on("X", 3, L.graph)
    regions = [{3}, {2, 3, 4}, {1, 2, 3, 4, 5}, set(L.graph.vertices)]
    report = truncation_error_series(L, A, regions, 0.0, 0.2)
    assert report.abscissae[:3] == [1.0, 2.0, 3.0]
    assert math.isinf(report.abscissae[-1])
    assert report.verdict["decreasing"]
    assert report.verdict["full_region"]
    assert report.grid[-1].envelope is None


def test_truncation_regions_must_contain_the_observable(chain_model):
    L = chain_model(4)
    with pytest.raises(ValueError):
        truncation_error_series(L, pauli_on("X", 1, L.graph), [{2, 3}], 0.0, 0.1)


# --- Covariance ---

def test_product_state_has_no_initial_covariance(chain_model):
    L = chain_model(4)
    rho = product_state(L.graph, [PLUS] * 4)
    A, B = pauli_on("X", 1, L.graph), pauli_on("X", 4, L.graph)
    assert abs(covariance(rho, A, B)) < 1e-15
    report = covariance_cone_experiment(L, rho, A, B, 0.0, [0.0, 0.05])
    assert report.grid[0].measured < 1e-12
    assert report.verdict["initial_zero"]
    assert report.parameters["distance"] == 3.0


def test_covariance_requires_product_state(chain_model, rng):
    L = chain_model(3)
    A, B = pauli_on("X", 1, L.graph), pauli_on("X", 3, L.graph)
    with pytest.raises(OperatorError):
        covariance_cone_experiment(L, random_state(L.graph, rng), A, B, 0.0, [0.0])


def test_bell_state_covariance():
    g = chain(2)
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
    rho = StateOperator(np.outer(psi, psi), g)
    assert covariance(rho, pauli_on("Z", 1, g), pauli_on("Z", 2, g)) == pytest.approx(1.0, abs=1e-14)


def test_repeated_covariance_times_are_measured_once(chain_model):
    L = chain_model(3)
    rho = product_state(L.graph, [PLUS] * 3)
    A, B = pauli_on("X", 1, L.graph), pauli_on("X", 3, L.graph)
    report = covariance_cone_experiment(L, rho, A, B, 0.0, [0.05, 0.0, 0.05])
    assert [pt.abscissa for pt in report.grid] == [0.0, 0.05]


# --- Trotter ---

def test_single_edge_step_is_exact(chain_model):
    L = chain_model(2, gamma=0.0)
    A = pauli_on("X", 1, L.graph)
    approx = trotter_evolve(L, A, 0.0, 0.4, 1)
    assert np.allclose(approx.matrix, propagate_observable(L, A, 0.0, 0.4, 1e-12).matrix, atol=1e-10)


def test_commuting_terms_have_no_trotter_error():
    factory = TermFactory()
    g = chain(3)
    terms = (factory.build_many("ising_edge", [(1, 2), (2, 3)], 1.0)
             + factory.build_many("longitudinal_field_site", [(1,), (2,), (3,)], 0.5)
             + factory.build_many("dephasing_site", [(1,), (2,), (3,)], 0.1))
    L = assemble(g, terms)
    A = pauli_on("X", 2, L.graph)
    assert trotter_error(L, A, 0.0, 0.5, 1) < 1e-9


def test_trotter_error_is_first_order(chain_model):
    L = chain_model(3, gamma=0.1)
    A = staggered_z(L.graph)
    report = trotter_error_series(L, A, 0.0, 0.5, [8, 16, 32, 64])
    assert all(b < a for a, b in zip(report.measured, report.measured[1:]))
    assert report.verdict["order"]


def test_trotter_steps_must_increase(chain_model):
    L = chain_model(2)
    with pytest.raises(ValueError):
        trotter_error_series(L, pauli_on("Z", 1, L.graph), 0.0, 0.5, [4, 2])
    with pytest.raises(ValueError):
        trotter_evolve(L, pauli_on("Z", 1, L.graph), 0.0, 0.5, 0)


def test_trotter_error_grows_with_system_size(chain_model):
    models = []
    for n in (3, 4):
        L = chain_model(n, gamma=0.1)
        models.append((L, staggered_z(L.graph)))
    report = trotter_size_scan(models, 0.0, 0.5, 4)
    assert report.abscissae == sorted(report.abscissae)
    assert report.verdict["grows_with_edges"]


# --- Fits and fan-out ---

def test_log_linear_fit_recovers_rate():
    x = np.arange(1, 6)
    fit = log_linear_fit(x, 3 * np.exp(-1.5 * x))
    assert fit.slope == pytest.approx(-1.5)
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.r_squared == pytest.approx(1.0)


def test_log_log_fit_recovers_order():
    n = np.array([4, 8, 16, 32])
    assert log_log_fit(n, 0.5 / n).slope == pytest.approx(-1.0)


def test_fit_needs_two_positive_points():
    fit = log_linear_fit([1, 2, 3], [1.0, 0.0, -1.0])
    assert not fit.ok
    assert fit is NO_FIT


def test_threshold_overrides():
    merged = thresholds({"slope_max": -2.0})
    assert merged["slope_max"] == -2.0
    assert merged["r2_min"] == 0.98


def test_fan_out_keeps_input_order():
    assert pool.fan_out(lambda x: x * x, [3, 1, 2], jobs=3) == [9, 1, 4]


def test_fan_out_reraises_failures():
    def boom(x):
        if x == 2:
            raise RuntimeError("bad point")
        return x

    with pytest.raises(RuntimeError):
        pool.fan_out(boom, [1, 2, 3], jobs=2)
