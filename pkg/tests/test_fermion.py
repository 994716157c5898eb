import numpy as np
import pytest

from src.errors import IndexOutOfRange, OddParity
from src.fermion.experiment import fermionic_lr_experiment, spin_liouvillian
from src.fermion.identities import (
    anticommutation_residuals,
    homomorphism_residual,
    locality_violations,
    mapping_residuals,
    spectrum_residual,
)
from src.fermion.jordan_wigner import (
    FermionMonomial,
    FermionPolynomial,
    annihilation,
    creation,
    fermion_op,
    hopping,
    hopping_chain,
    hopping_chain_closed_form,
    jw_map,
    majorana,
    number_op,
    parity_of,
)
from src.IR.models import Parity
from src.operators.core import kron_all, support_of
from src.operators.paulis import I2, Z


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_anticommutation_relations(N):
    for key, residual in anticommutation_residuals(N).items():
        assert residual < 1e-12, key


@pytest.mark.parametrize("N", [1, 3])
def test_mapping_identities(N):
    for key, residual in mapping_residuals(N).items():
        assert residual < 1e-12, key


def test_mapping_is_multiplicative():
    assert homomorphism_residual(3) < 1e-11


def test_even_nearest_neighbour_terms_stay_local():
    assert locality_violations(5) == 0


def test_majorana_string_support():
    assert majorana(5, 4).declared_support == {1, 2, 3}
    assert support_of(majorana(5, 4).with_matrix(majorana(5, 4).matrix)) == {1, 2, 3}


def test_number_operator_occupies_zero_state():
    n2 = jw_map(number_op(2), 3).matrix
    assert np.allclose(n2, kron_all([I2, (I2 + Z) / 2, I2]))


def test_one_particle_spectrum():
    assert spectrum_residual(5) < 1e-9
    assert spectrum_residual(4, J=0.7, mu=0.3) < 1e-9
    assert hopping_chain_closed_form(1) == pytest.approx([0.0])


def test_parity_classification():
    assert parity_of(number_op(1)) == Parity.EVEN
    assert parity_of(creation(2)) == Parity.ODD
    assert parity_of(creation(1) + number_op(1)) == Parity.MIXED
    assert parity_of(FermionPolynomial()) == Parity.EVEN


def test_odd_polynomials_need_the_override():
    with pytest.raises(OddParity):
        jw_map(annihilation(1), 2)
    f1 = jw_map(annihilation(1), 2, allow_odd=True)
    assert np.allclose(f1.matrix, fermion_op(1, False, 2).matrix)


def test_indices_are_checked():
    with pytest.raises(IndexOutOfRange):
        fermion_op(3, True, 2)
    with pytest.raises(IndexOutOfRange):
        majorana(0, 2)
    with pytest.raises(IndexOutOfRange):
        jw_map(number_op(4), 3)
    with pytest.raises(IndexOutOfRange):
        FermionMonomial.from_signed([1, 0])


def test_monomial_adjoint_reverses_order():
    m = FermionMonomial.from_signed([2, -3], 1j)
    assert m.adjoint() == FermionMonomial(((3, True), (2, False)), -1j)
    P = hopping(1, 3, 0.5 + 0.5j)
    assert np.allclose(jw_map(P, 3).matrix, jw_map(P.adjoint(), 3).matrix)


def test_spin_liouvillian_of_hopping_chain():
    terms = [(support, poly, None) for support, poly in hopping_chain(4, J=1.0, mu=0.2)]
    L = spin_liouvillian(terms, 4)
    assert len(L.edges) == 7
    assert all(len(edge) <= 2 for edge in L.edges)


def test_fermionic_cone():
    N = 5
    terms = [(support, poly, None) for support, poly in hopping_chain(N)]
    observables = [number_op(j) for j in range(2, N + 1)]
    report = fermionic_lr_experiment(terms, number_op(1), observables, N, 0.0, 0.2)
    assert report.abscissae == [1.0, 2.0, 3.0, 4.0]
    assert all(b < a for a, b in zip(report.measured, report.measured[1:]))
    assert report.verdict["below_envelope"]
    assert not report.parameters["anticommutator"]


def test_fermionic_cone_with_odd_observables():
    N = 3
    terms = [(support, poly, None) for support, poly in hopping_chain(N)]
    with pytest.raises(OddParity):
        fermionic_lr_experiment(terms, creation(1), [annihilation(3)], N, 0.0, 0.1)
    report = fermionic_lr_experiment(terms, creation(1), [annihilation(3)], N, 0.0, 0.1, allow_odd=True)
    assert report.parameters["anticommutator"]
    assert report.grid[0].measured > 0.0


def test_odd_hamiltonian_terms_are_rejected():
    with pytest.raises(OddParity):
        spin_liouvillian([((1,), creation(1), None)], 2)
