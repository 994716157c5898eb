from .core import (
    DEFAULT_TOL,
    GlobalOperator,
    StateOperator,
    anticommutator,
    commutator,
    embed,
    expectation,
    hs_inner,
    identity,
    is_product_state,
    op_norm,
    partial_trace_restriction,
    product_state,
    random_hermitian,
    random_state,
    support_of,
)
from .paulis import I2, PAULIS, SIGMA_MINUS, X, Y, Z, pauli, pauli_on, pauli_string
