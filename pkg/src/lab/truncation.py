import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence

from src.graph.hypergraph import InteractionGraph, Vertex, distance, spatial_dimension_constant
from src.IR.models import BoundParameters, BoundPoint, BoundReport
from src.lab.fitting import log_linear_fit, thresholds
from src.lab.leakage import default_bound_parameters, metric_graph, observable_support
from src.lab.pool import fan_out
from src.model.liouvillian import LocalLiouvillian, truncate
from src.operators.core import DEFAULT_TOL, GlobalOperator, op_norm
from src.propagation.integrator import propagate_observable

logger = logging.getLogger(__name__)


def truncation_envelope(p: BoundParameters, M: float, Z: int, mu: int, D: float, dt: float, normA: float) -> float:
    """(2M/Z)·D^(μ−1)·exp(v·dt − D)·‖A‖."""
    if math.isinf(D):
        return 0.0
    return (2 * M / Z) * D ** (mu - 1) * math.exp(p.v * dt - D) * normA


def buffer_distance(g: InteractionGraph, X: Iterable[Vertex], region: Iterable[Vertex]) -> float:
    """d(X, V \\ V'), infinite when the region is the whole vertex set."""
    rest = set(g.vertices) - set(region)
    if not rest:
        return math.inf
    return float(distance(g, X, rest))


def _check_nested(X: frozenset, regions: List[frozenset]):
    for region in regions:
        if not X <= region:
            raise ValueError(f"Region {sorted(region, key=str)} does not contain the observable support")
    for inner, outer in zip(regions, regions[1:]):
        if not inner <= outer:
            raise ValueError("Truncation regions must be nested")


def truncation_error_series(L: LocalLiouvillian, A: GlobalOperator, regions: Sequence[Iterable[Vertex]],
                            s: float, t: float, params: Optional[BoundParameters] = None, mu: int = 1,
                            M: Optional[float] = None, tol: float = DEFAULT_TOL, jobs: Optional[int] = None,
                            verdict_thresholds: Optional[Dict[str, float]] = None,
                            name: str = "truncation_vs_buffer") -> BoundReport:
    """‖τ_{L|V'}(A) − τ_L(A)‖ for nested regions V', against the buffer distance D = d(X, V \\ V')."""
    g = metric_graph(L)
    X = observable_support(A)
    regions = [frozenset(r) for r in regions]
    _check_nested(X, regions)
    if M is None:
        M = spatial_dimension_constant(g, mu)
    p = params or default_bound_parameters(L, X, X)
    Z = max(L.Z, 1)
    dt = t - s
    normA = op_norm(A)

    reference = propagate_observable(L, A, s, t, tol).matrix

    def measure(region: frozenset) -> float:
        truncated = propagate_observable(truncate(L, region), A, s, t, tol).matrix
        return op_norm(truncated - reference)

    errors = fan_out(measure, regions, jobs, desc="Truncation regions")

    grid = []
    for region, error in zip(regions, errors):
        D = buffer_distance(g, X, region)
        hypothesis = math.isinf(D) or D >= 2 * mu - 1
        if not hypothesis:
            logger.warning(f"Buffer D={D:g} violates D >= 2mu-1 = {2 * mu - 1}; envelope is indicative only")
        envelope = None if math.isinf(D) else truncation_envelope(p, M, Z, mu, D, dt, normA)
        grid.append(BoundPoint(D, error, envelope, {"region_size": len(region), "hypothesis": hypothesis}))
    grid.sort(key=lambda pt: pt.abscissa)

    limits = thresholds(verdict_thresholds)
    finite = [pt for pt in grid if math.isfinite(pt.abscissa)]
    full = [pt for pt in grid if math.isinf(pt.abscissa)]
    fit = log_linear_fit([pt.abscissa for pt in finite], [pt.measured for pt in finite])
    report = BoundReport(name, "buffer_distance", grid, fit.slope, fit.intercept, fit.r_squared)
    report.verdict = {
        "decreasing": all(b.measured < a.measured for a, b in zip(finite, finite[1:])),
        "slope": fit.ok and fit.slope <= limits["slope_max"],
        "below_envelope": report.below_envelope(),
    }
    if full:
        report.verdict["full_region"] = full[0].measured <= limits["full_region_max"]
    report.parameters = {"bound": p.to_dict(), "mu": mu, "M": M, "Z": Z, "b": L.b, "dt": dt, "b_dt": L.b * dt}
    logger.info(f"{report}")
    return report
