from .jordan_wigner import (
    FermionMonomial,
    FermionPolynomial,
    annihilation,
    creation,
    fermion_op,
    hopping,
    hopping_chain,
    hopping_matrix_oracle,
    jw_map,
    majorana,
    number_op,
    one_particle_spectrum,
    parity_of,
)
from .experiment import fermionic_graph, fermionic_lr_experiment, spin_liouvillian
from .identities import (
    anticommutation_residuals,
    homomorphism_residual,
    locality_violations,
    mapping_residuals,
    spectrum_residual,
)
