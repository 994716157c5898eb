import logging
import math
import os
import time
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.errors import (
    ConfigError,
    Disconnected,
    ExperimentFailed,
    FermionError,
    GraphError,
    ModelError,
    ModelInvalid,
    OperatorError,
    PropagationError,
)
from src.fermion import (
    anticommutation_residuals,
    fermionic_lr_experiment,
    homomorphism_residual,
    locality_violations,
    mapping_residuals,
    spectrum_residual,
    spin_liouvillian,
)
from src.graph.hypergraph import (
    InteractionGraph,
    diameter,
    distance,
    estimate_spatial_dimension,
    is_connected,
    max_neighbors,
    spatial_dimension_constant,
)
from src.graph.lattices import chain
from src.IR.models import BoundParameters, Diagnostic, ExperimentKind, ExperimentResult, ParameterSource
from src.lab import pool
from src.lab.covariance import covariance_cone_experiment
from src.lab.fitting import thresholds
from src.lab.leakage import default_bound_parameters, leakage_series, observable_support
from src.lab.trotter import trotter_error, trotter_error_series, trotter_size_scan
from src.lab.truncation import truncation_error_series
from src.model.factory import TermFactory, random_term
from src.model.liouvillian import LocalLiouvillian, assemble
from src.operators.core import (
    GlobalOperator,
    StateOperator,
    hs_inner,
    product_state,
    random_hermitian,
    random_state,
)
from src.parsers.config_parser import ConfigParser, ExperimentConfig, ModelSpec
from src.propagation.integrator import propagate_observable, propagate_state
from src.propagation.superoperator import (
    adjoint_consistency_check,
    choi_min_eigenvalue,
    exact_propagator,
    propagator_matrix,
    trace_preservation_error,
    transpose_map,
)
from src.storage.matrix_storage import MatrixStorage
from src.storage.report_storage import ReportStorage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERDICT_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

DEFAULT_OUT_DIR = "reports"

_PLUS = np.full((2, 2), 0.5, dtype=complex)
_ZERO = np.diag([1.0, 0.0]).astype(complex)


def _open_chain_M(n: int) -> float:
    """
    Largest sphere of an open n-site chain from bond indices alone: bonds i and j are at
    distance |i - j| - 1 once they share no site.
    """
    bonds = range(n - 1)
    counts = Counter((i, abs(i - j) - 1) for i in bonds for j in bonds if abs(i - j) >= 2)
    return float(max(counts.values(), default=0))


def exit_code_for(error: BaseException) -> int:
    """0 pass, 1 failed verdict, 2 invalid config or model, 3 numerical failure."""
    if isinstance(error, ExperimentFailed):
        return EXIT_VERDICT_FAILED
    if isinstance(error, (ConfigError, GraphError, OperatorError, ModelError, FermionError, ValueError)):
        return EXIT_INVALID
    return EXIT_NUMERICAL


@dataclass
class RunSettings:
    out_dir: Optional[str] = None
    jobs: Optional[int] = None
    seed: Optional[int] = None
    tolerance_scale: float = 1.0
    quiet: bool = False
    save_matrices: bool = False


class ExperimentRunner:
    """
    Batch pipeline behind `run` and `validate`: parse, cross-check, execute one experiment kind,
    and write its reports. All outputs depend only on the config and the seed.
    """

    def __init__(self, settings: Optional[RunSettings] = None, factory: Optional[TermFactory] = None):
        self.settings = settings or RunSettings()
        self.factory = factory or TermFactory()
        self.parser = ConfigParser(self.factory)
        pool.PROGRESS_DISABLED = self.settings.quiet
        self._handlers: Dict[ExperimentKind, Callable[[ExperimentConfig, ExperimentResult], None]] = {
            ExperimentKind.LEAKAGE_VS_DISTANCE: self._leakage_vs_distance,
            ExperimentKind.TRUNCATION_VS_BUFFER: self._truncation_vs_buffer,
            ExperimentKind.COVARIANCE_CONE: self._covariance_cone,
            ExperimentKind.TROTTER_ORDER: self._trotter_order,
            ExperimentKind.PICTURE_DUALITY: self._picture_duality,
            ExperimentKind.CPTP_AUDIT: self._cptp_audit,
            ExperimentKind.JW_IDENTITY_SUITE: self._jw_identity_suite,
            ExperimentKind.FERMIONIC_CONE: self._fermionic_cone,
            ExperimentKind.COMPOSITION_ADJOINT: self._composition_adjoint,
            ExperimentKind.GRAPH_METRICS: self._graph_metrics,
        }

    def load(self, config_path: str) -> ExperimentConfig:
        config = self.parser.parse(config_path)
        if self.settings.seed is not None:
            config.seed = self.settings.seed
        config.tolerance *= self.settings.tolerance_scale
        return config

    def validate(self, config_path: str) -> List[Diagnostic]:
        diagnostics = self.parser.validate(config_path)
        for d in diagnostics:
            logger.warning(f"{config_path}: {d}")
        return diagnostics

    def out_dir(self, config: ExperimentConfig) -> str:
        return (self.settings.out_dir or os.getenv("LOCALITY_OUT_DIR") or config.output_dir or DEFAULT_OUT_DIR)

    def execute(self, config: ExperimentConfig) -> ExperimentResult:
        logger.info(f"Running '{config.name}' ({config.kind.value}), seed={config.seed}, tol={config.tolerance:g}")
        result = ExperimentResult(config.name, config.kind)
        result.metrics["seed"] = config.seed
        result.metrics["tolerance"] = config.tolerance
        self._handlers[config.kind](config, result)
        return result

    def run(self, config_path: str) -> Tuple[ExperimentResult, List[str]]:
        """Parses, validates, executes and saves; raises ExperimentFailed after writing if a verdict fails."""
        config = self.load(config_path)
        diagnostics = self.parser.diagnose(config, build_model=False)
        if diagnostics:
            raise ModelInvalid("; ".join(str(d) for d in diagnostics))

        started = time.perf_counter()
        result = self.execute(config)
        wall_time = time.perf_counter() - started

        storage = ReportStorage(self.out_dir(config))
        paths = storage.save_result(result, wall_time)
        for key, ok in result.checks.items():
            logger.info(f"  check {key}: {'pass' if ok else 'FAIL'}")
        for report in result.reports:
            logger.info(f"  {report}")
        if not result.passed:
            failed = [k for k, ok in result.checks.items() if not ok]
            failed += [f"{r.name}.{k}" for r in result.reports for k, ok in r.verdict.items() if not ok]
            raise ExperimentFailed(f"'{config.name}' failed: {', '.join(failed)}", paths)
        logger.info(f"'{config.name}' passed in {wall_time:.1f}s")
        return result, paths

    # --- Shared builders ---

    def _liouvillian(self, config: ExperimentConfig, model: Optional[ModelSpec] = None) -> LocalLiouvillian:
        try:
            return (model or config.model).liouvillian(self.factory)
        except (GraphError, ModelError, OperatorError) as e:
            raise ModelInvalid(str(e)) from e

    def _single(self, config: ExperimentConfig, key: str, g: InteractionGraph) -> GlobalOperator:
        operators = config.observable(key).spin_operators(g)
        if len(operators) != 1:
            raise ModelInvalid(f"observables.{key} must name exactly one operator, got {len(operators)}")
        return operators[0]

    def _bound_parameters(self, config: ExperimentConfig, L: LocalLiouvillian, A: GlobalOperator,
                          B: Optional[GlobalOperator] = None) -> Optional[BoundParameters]:
        """Configured v and C, with defaults filling whichever one is missing; None when neither is set."""
        bounds = config.bounds
        if bounds.v is None and bounds.C is None:
            return None
        X = observable_support(A)
        defaults = default_bound_parameters(L, X, observable_support(B) if B is not None else X)
        return BoundParameters(bounds.v if bounds.v is not None else defaults.v,
                               bounds.C if bounds.C is not None else defaults.C, ParameterSource.CONFIGURED)

    def _geometry(self, config: ExperimentConfig, g: InteractionGraph) -> Tuple[int, float]:
        """(mu, M) on the declared graph (before term supports are added), resolving "auto" entries."""
        mu = estimate_spatial_dimension(g) if config.bounds.mu == "auto" else int(config.bounds.mu)
        M = config.bounds.M
        if M is None or M == "auto":
            M = spatial_dimension_constant(g, mu)
        return mu, float(M)

    def _initial_state(self, config: ExperimentConfig, g: InteractionGraph, rng: np.random.Generator) -> StateOperator:
        kind = config.state
        if kind == "zero":
            return product_state(g, [_ZERO] * len(g.vertices))
        if kind == "plus":
            return product_state(g, [_PLUS] * len(g.vertices))
        if kind == "random_product":
            locals_ = []
            for v in g.vertices:
                d = g.local_dims[v]
                psi = rng.normal(size=d) + 1j * rng.normal(size=d)
                psi /= np.linalg.norm(psi)
                locals_.append(np.outer(psi, psi.conj()))
            return product_state(g, locals_)
        if kind == "random":
            return random_state(g, rng)
        raise ModelInvalid(f"Unknown initial state kind '{kind}' (zero, plus, random_product, random)")

    # --- Experiment kinds ---

    def _leakage_vs_distance(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        s, t = config.grid.s, config.grid.end_time(L.b)
        A = self._single(config, "a", L.graph)
        observables = config.observable("b").spin_operators(L.graph)
        params = self._bound_parameters(config, L, A, observables[0])
        report = leakage_series(L, A, observables, s, t, params, config.tolerance,
                                verdict_thresholds=config.verdict, name=config.name)
        result.reports.append(report)
        mu, M = self._geometry(config, config.model.graph())
        result.metrics.update({"mu": mu, "M": M, "b": L.b, "Z": L.Z, "t": t})

    def _truncation_vs_buffer(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        g = L.graph
        s, t = config.grid.s, config.grid.end_time(L.b)
        A = self._single(config, "a", g)
        X = observable_support(A)
        regions = [list(r) for r in config.grid.regions]
        for radius in config.grid.radii:
            regions.append([v for v in g.vertices if float(distance(g, X, [v])) <= radius])
        if config.grid.full_region:
            regions.append(list(g.vertices))
        mu, M = self._geometry(config, config.model.graph())
        report = truncation_error_series(L, A, regions, s, t, self._bound_parameters(config, L, A), mu, M,
                                         config.tolerance, self.settings.jobs, config.verdict, name=config.name)
        result.reports.append(report)
        result.metrics.update({"mu": mu, "M": M, "b": L.b, "Z": L.Z, "t": t})

    def _covariance_cone(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        g = L.graph
        rng = np.random.default_rng(config.seed)
        rho = self._initial_state(config, g, rng)
        A, B = self._single(config, "a", g), self._single(config, "b", g)
        times = config.grid.time_grid(L.b)
        report = covariance_cone_experiment(L, rho, A, B, config.grid.s, times, self._bound_parameters(config, L, A, B),
                                            config.bounds.constant, config.tolerance, self.settings.jobs,
                                            config.verdict, name=config.name)
        result.reports.append(report)
        result.metrics.update({"b": L.b, "Z": L.Z, "state": config.state})

    def _trotter_order(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        grid = config.grid
        s, t = grid.s, grid.end_time(L.b)
        A = self._single(config, "a", L.graph)
        result.reports.append(trotter_error_series(L, A, s, t, grid.steps, config.tolerance, self.settings.jobs,
                                                   config.verdict, name=config.name))
        limits = thresholds(config.verdict)

        if grid.control_terms:
            control_model = replace(config.model, terms=grid.control_terms)
            control = self._liouvillian(config, control_model)
            key = "control" if "control" in config.observables else "a"
            C = self._single(config, key, control.graph)
            error = trotter_error(control, C, s, t, 1, tol=config.tolerance)
            result.metrics["commuting_control_error"] = error
            result.checks["commuting_control"] = error <= limits["commuting_max"]
            logger.info(f"Commuting control at n=1: error {error:.3e}")

        if grid.sizes:
            n_steps = grid.size_steps or grid.steps[0]
            models = []
            for n in grid.sizes:
                Ln = self._liouvillian(config, config.model.resized(n))
                models.append((Ln, self._single(config, "a", Ln.graph)))
            # every size runs over the same duration in units of the base model's b
            result.reports.append(trotter_size_scan(models, s, t, n_steps, config.tolerance,
                                                    name=f"{config.name}_size_growth"))

    def _picture_duality(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        g = L.graph
        s, t = config.grid.s, config.grid.end_time(L.b)
        rng = np.random.default_rng(config.seed)
        pairs = [(random_state(g, rng), random_hermitian(g, rng)) for _ in range(config.grid.pairs)]

        def discrepancy(pair: Tuple[StateOperator, GlobalOperator]) -> float:
            rho, A = pair
            heisenberg = hs_inner(rho, propagate_observable(L, A, s, t, config.tolerance))
            schrodinger = hs_inner(propagate_state(L, rho, s, t, config.tolerance), A)
            return abs(heisenberg - schrodinger)

        values = pool.fan_out(discrepancy, pairs, self.settings.jobs, desc="Duality pairs")
        worst = max(values)
        result.metrics.update({"max_discrepancy": worst, "pairs": len(pairs), "b": L.b, "t": t})
        result.checks["duality"] = worst <= thresholds(config.verdict)["duality_max"]

    def _composition_adjoint(self, config: ExperimentConfig, result: ExperimentResult):
        L = self._liouvillian(config)
        grid = config.grid
        s, t = grid.s, grid.end_time(L.b)
        r = grid.r if grid.r is not None else (s + t) / 2
        if not s <= r <= t:
            raise ModelInvalid(f"Intermediate time {r} outside [{s}, {t}]")
        tol, jobs = config.tolerance, self.settings.jobs
        limits = thresholds(config.verdict)

        T_ts = propagator_matrix(L, s, t, tol, jobs)
        T_tr = propagator_matrix(L, r, t, tol, jobs)
        T_rs = propagator_matrix(L, s, r, tol, jobs)
        composition = float(np.linalg.norm(T_ts.matrix - (T_tr @ T_rs).matrix))
        adjoint = adjoint_consistency_check(L, s, t, tol, jobs)
        result.metrics.update({"composition_error": composition, "adjoint_error": adjoint, "r": r, "t": t})
        result.checks["composition"] = composition <= limits["composition_max"]
        result.checks["adjoint"] = adjoint <= limits["adjoint_max"]

        try:
            exact = exact_propagator(L, s, t)
        except (ModelError, PropagationError) as e:
            logger.info(f"Skipping closed-form comparison: {e}")
        else:
            gap = float(np.linalg.norm(T_ts.matrix - exact.matrix))
            result.metrics["exact_error"] = gap
            result.checks["matches_exact"] = gap <= limits["composition_max"]
        if self.settings.save_matrices:
            MatrixStorage(os.path.join(self.out_dir(config), "matrices")).save(f"{config.name}_T", T_ts)

    def _cptp_audit(self, config: ExperimentConfig, result: ExperimentResult):
        g = config.model.graph()
        rng = np.random.default_rng(config.seed)
        grid = config.grid
        limits = thresholds(config.verdict)
        supports = [tuple(g.ordered(e)) for e in g.hyperedges]
        if not supports:
            raise ModelInvalid("CPTP audits draw random terms on the model's hyperedges; none are declared")

        rows = []
        for k in range(grid.samples):
            terms = [random_term(sup, rng, [g.local_dims[v] for v in sup], grid.jumps) for sup in supports]
            L = assemble(g, terms)
            t = grid.end_time(L.b)
            T = propagator_matrix(L, grid.s, t, config.tolerance, self.settings.jobs)
            rows.append((float(k), choi_min_eigenvalue(T), trace_preservation_error(T), t))
            logger.debug(f"Sample {k}: min Choi eigenvalue {rows[-1][1]:.3e}, trace error {rows[-1][2]:.3e}")
            if self.settings.save_matrices:
                MatrixStorage(os.path.join(self.out_dir(config), "matrices")).save(f"{config.name}_{k}", T)

        control = transpose_map(g.hilbert_dim) @ T
        control_eig = choi_min_eigenvalue(control)
        ReportStorage(self.out_dir(config)).save_rows_csv(
            config.name, "samples", ["sample", "choi_min_eigenvalue", "trace_error", "t"], rows)
        result.metrics.update({
            "min_choi_eigenvalue": min(r[1] for r in rows),
            "max_trace_error": max(r[2] for r in rows),
            "transpose_control_eigenvalue": control_eig,
        })
        result.checks["completely_positive"] = all(r[1] >= limits["choi_min"] for r in rows)
        result.checks["trace_preserving"] = all(r[2] <= limits["trace_max"] for r in rows)
        result.checks["transpose_detected"] = control_eig < limits["choi_min"]

    def _jw_identity_suite(self, config: ExperimentConfig, result: ExperimentResult):
        limits = thresholds(config.verdict)
        worst: Dict[str, float] = {}
        for N in range(1, config.grid.max_sites + 1):
            for key, value in {**mapping_residuals(N), **anticommutation_residuals(N)}.items():
                worst[key] = max(worst.get(key, 0.0), value)
        homomorphism = max(homomorphism_residual(N) for N in range(1, min(4, config.grid.max_sites) + 1))
        violations = locality_violations(config.grid.max_sites)
        N = config.fermion_model.sites
        spectrum = spectrum_residual(N)
        result.metrics.update({"residuals": worst, "homomorphism_residual": homomorphism,
                               "locality_violations": violations, "spectrum_residual": spectrum,
                               "spectrum_sites": N})
        for key, value in sorted(worst.items()):
            result.checks[f"identity_{key}"] = value <= limits["identity_max"]
        result.checks["homomorphism"] = homomorphism <= limits["homomorphism_max"]
        result.checks["locality"] = violations == 0
        result.checks["spectrum"] = spectrum <= limits["spectrum_max"]

    def _fermionic_cone(self, config: ExperimentConfig, result: ExperimentResult):
        model = config.fermion_model
        A_spec, B_spec = config.observable("a"), config.observable("b")
        if len(A_spec.polynomials) != 1:
            raise ModelInvalid("observables.a must be a single fermionic polynomial")
        b = spin_liouvillian(model.terms, model.sites, config.tolerance).b
        t = config.grid.end_time(b)
        report = fermionic_lr_experiment(model.terms, A_spec.polynomials[0], B_spec.polynomials, model.sites,
                                         config.grid.s, t, allow_odd=config.allow_odd, tol=config.tolerance,
                                         verdict_thresholds=config.verdict, name=config.name)
        result.reports.append(report)
        result.metrics.update({"b": b, "t": t, "sites": model.sites})

    def _graph_metrics(self, config: ExperimentConfig, result: ExperimentResult):
        g = config.model.graph()
        Z = max_neighbors(g)
        connected = is_connected(g)
        result.metrics.update({"Z": Z, "connected": connected,
                               "vertices": len(g.vertices), "hyperedges": len(g.hyperedges)})
        expected = config.verdict
        if connected:
            mu, M = self._geometry(config, g)
            result.metrics.update({"diameter": diameter(g), "mu": mu, "M": M})
        elif "expect_M" in expected:
            raise Disconnected("M is undefined on a graph whose hyperedges are not connected")
        else:
            logger.info(f"{g} is not connected; skipping diameter and M")
        if "expect_Z" in expected:
            result.checks["Z"] = Z == int(expected["expect_Z"])
        if "expect_M" in expected:
            result.checks["M"] = math.isclose(M, expected["expect_M"])
        for n in config.grid.sizes:
            c = chain(n)
            mismatches = sum(1 for j in c.vertices for k in c.vertices
                             if distance(c, [j], [k]) != abs(j - k))
            result.checks[f"chain_{n}_distances"] = mismatches == 0
            chain_M = spatial_dimension_constant(c, 1)
            result.metrics[f"chain_{n}_M"] = chain_M
            result.checks[f"chain_{n}_M"] = math.isclose(chain_M, _open_chain_M(n))
