from .integrator import PropagationRequest, integrate, propagate_observable, propagate_state, rk4_fixed
from .superoperator import (
    SuperoperatorMatrix,
    adjoint_consistency_check,
    choi_matrix,
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
