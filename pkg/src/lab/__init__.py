from .covariance import covariance, covariance_cone_experiment
from .fitting import DEFAULT_THRESHOLDS, log_linear_fit, log_log_fit
from .leakage import (
    anticommutator_leakage,
    commutator_leakage,
    commutator_term,
    default_bound_parameters,
    leakage_series,
    lr_envelope,
    perturbation_leakage,
    signal_leakage,
)
from .truncation import truncation_error_series
from .trotter import trotter_error_series, trotter_evolve, trotter_size_scan
