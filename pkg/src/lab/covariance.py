import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np

from src.errors import DimensionMismatch, OperatorError
from src.graph.hypergraph import distance
from src.IR.models import BoundParameters, BoundPoint, BoundReport
from src.lab.leakage import default_bound_parameters, metric_graph, observable_support
from src.lab.fitting import thresholds
from src.lab.pool import fan_out
from src.model.liouvillian import LocalLiouvillian
from src.operators.core import DEFAULT_TOL, GlobalOperator, is_product_state
from src.propagation.integrator import propagate_observable

logger = logging.getLogger(__name__)


def _trace_product(rho: np.ndarray, A: np.ndarray) -> complex:
    return complex(np.einsum("ij,ji->", rho, A))


def covariance(rho: GlobalOperator, A: GlobalOperator, B: GlobalOperator) -> complex:
    """cov_ρ(A, B) = Tr(ρAB) − Tr(ρA)·Tr(ρB), without symmetrization."""
    if not (rho.dim == A.dim == B.dim):
        raise DimensionMismatch(f"Dimensions differ: ρ {rho.dim}, A {A.dim}, B {B.dim}")
    r = rho.matrix
    return _trace_product(r, A.matrix @ B.matrix) - _trace_product(r, A.matrix) * _trace_product(r, B.matrix)


def covariance_cone_experiment(L: LocalLiouvillian, rho: GlobalOperator, A: GlobalOperator, B: GlobalOperator,
                               s: float, times: Sequence[float], params: Optional[BoundParameters] = None,
                               constant: float = 1.0, tol: float = DEFAULT_TOL, jobs: Optional[int] = None,
                               verdict_thresholds: Optional[Dict[str, float]] = None,
                               name: str = "covariance_cone") -> BoundReport:
    """
    |cov_ρ(τ(s,t)A, τ(s,t)B)| over t for a product initial state, against constant·exp(v(t−s) − d/2).

    Repeated times are measured once.
    """
    if not is_product_state(rho):
        raise OperatorError("Covariance cone experiments need a product initial state")
    times = sorted({float(t) for t in times})
    if times and times[0] < s:
        raise ValueError(f"Time {times[0]} precedes start time {s}")
    X, Y = observable_support(A), observable_support(B)
    d = float(distance(metric_graph(L), X, Y))
    p = params or default_bound_parameters(L, X, Y)

    def measure(t: float) -> complex:
        tA = propagate_observable(L, A, s, t, tol)
        tB = propagate_observable(L, B, s, t, tol)
        return covariance(rho, tA, tB)

    values = fan_out(measure, times, jobs, desc="Covariance times")

    grid = []
    for t, value in zip(times, values):
        envelope = constant * math.exp(p.v * (t - s) - d / 2) if math.isfinite(d) else 0.0
        grid.append(BoundPoint(t, abs(value), envelope,
                               {"real": value.real, "imag": value.imag, "in_cone": p.v * (t - s) <= d / 4}))

    limits = thresholds(verdict_thresholds)
    report = BoundReport(name, "time", grid)
    initial = [pt for pt in grid if pt.abscissa == s]
    inside = [pt for pt in grid if pt.metadata["in_cone"]]
    report.verdict = {
        "initial_zero": all(pt.measured <= limits["initial_max"] for pt in initial),
        "suppressed_in_cone": all(pt.measured <= limits["cone_max"] for pt in inside),
    }
    report.parameters = {"bound": p.to_dict(), "distance": d, "constant": constant, "b": L.b}
    logger.info(f"{report}")
    return report
