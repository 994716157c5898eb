import logging
import math
import os
import re
import tomllib
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ConfigParse, FermionError, LocalityError, ModelInvalid
from src.fermion.jordan_wigner import FermionMonomial, FermionPolynomial, hopping_chain, number_op, parity_of
from src.graph.hypergraph import InteractionGraph, build_graph
from src.graph.lattices import chain, figure_hypergraph, square_lattice
from src.IR.models import Diagnostic, ExperimentKind, Parity
from src.model.factory import TermFactory
from src.model.liouvillian import LocalLiouvillian, assemble
from src.model.schedule import CONSTANT_ONE, TimeSchedule
from src.model.terms import LindbladTerm
from src.operators.core import GlobalOperator, embed
from src.operators.paulis import pauli

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
Auto = str  # the literal "auto"


# --- Parsed specs ---

@dataclass
class TermSpec:
    supports: Union[str, List[Tuple[int, ...]]]
    builder: Optional[str] = None
    hamiltonian: Optional[np.ndarray] = None
    jumps: List[np.ndarray] = field(default_factory=list)
    coefficient: float = 1.0
    schedule: TimeSchedule = CONSTANT_ONE

    def resolve_supports(self, g: InteractionGraph) -> List[Tuple[int, ...]]:
        if self.supports == "edges":
            return [tuple(g.ordered(e)) for e in g.hyperedges if len(e) >= 2]
        if self.supports == "sites":
            return [(v,) for v in g.vertices]
        return [tuple(s) for s in self.supports]

    def build(self, g: InteractionGraph, factory: TermFactory) -> List[LindbladTerm]:
        supports = self.resolve_supports(g)
        if self.builder:
            return factory.build_many(self.builder, supports, self.coefficient, self.schedule)
        terms = []
        for support in supports:
            H = None if self.hamiltonian is None else self.coefficient * self.hamiltonian
            jumps = tuple(math.sqrt(abs(self.coefficient)) * L for L in self.jumps)
            dims = tuple(g.local_dims[v] for v in support)
            terms.append(LindbladTerm(support, H, jumps, self.schedule, "explicit", dims))
        return terms


@dataclass
class ModelSpec:
    lattice: str = "chain"
    sites: Optional[int] = None
    side: Optional[int] = None
    vertices: Optional[List[int]] = None
    hyperedges: Optional[List[Tuple[int, ...]]] = None
    local_dims: Union[int, List[int]] = 2
    with_site_edges: bool = False
    terms: List[TermSpec] = field(default_factory=list)

    def graph(self) -> InteractionGraph:
        if self.vertices is not None:
            dims = self.local_dims
            if isinstance(dims, list):
                if len(dims) != len(self.vertices):
                    raise ModelInvalid(f"local_dims lists {len(dims)} entries for {len(self.vertices)} vertices")
                dims = dict(zip(self.vertices, dims))
            edges = self.hyperedges if self.hyperedges is not None else [
                (a, b) for a, b in zip(self.vertices, self.vertices[1:])]
            return build_graph(self.vertices, edges, dims)
        if self.lattice == "figure":
            return figure_hypergraph()
        if self.lattice == "square":
            return square_lattice(self.side or 2)
        if self.sites is None:
            raise ModelInvalid("Model declares neither sites nor vertices")
        return chain(self.sites, with_sites=self.with_site_edges, local_dim=int(self.local_dims))

    def resized(self, sites: int) -> "ModelSpec":
        if self.vertices is not None or self.lattice != "chain":
            raise ModelInvalid("Only chain models declared by 'sites' can be resized")
        return replace(self, sites=sites)

    def build_terms(self, g: InteractionGraph, factory: Optional[TermFactory] = None) -> List[LindbladTerm]:
        factory = factory or TermFactory()
        terms = []
        for spec in self.terms:
            terms.extend(spec.build(g, factory))
        return terms

    def liouvillian(self, factory: Optional[TermFactory] = None, strict: bool = False) -> LocalLiouvillian:
        g = self.graph()
        return assemble(g, self.build_terms(g, factory), strict=strict)


@dataclass
class FermionModelSpec:
    sites: int
    terms: List[Tuple[Tuple[int, ...], FermionPolynomial, TimeSchedule]] = field(default_factory=list)


@dataclass
class ObservableSpec:
    """One observable or a family: pauli on site(s), staggered magnetization, or fermionic polynomial(s)."""
    pauli: Optional[str] = None
    sites: List[int] = field(default_factory=list)
    staggered: Optional[str] = None
    polynomials: List[FermionPolynomial] = field(default_factory=list)

    @property
    def is_fermionic(self) -> bool:
        return bool(self.polynomials)

    def spin_operators(self, g: InteractionGraph) -> List[GlobalOperator]:
        if self.staggered:
            local = pauli(self.staggered)
            total = None
            for i, v in enumerate(g.vertices):
                term = embed(local, [v], g) * ((-1) ** i)
                total = term if total is None else total + term
            return [total]
        return [embed(pauli(self.pauli), [v], g) for v in self.sites]


@dataclass
class GridSpec:
    s: float = 0.0
    t: Optional[float] = None
    b_dt: Optional[float] = None
    r: Optional[float] = None
    radii: List[int] = field(default_factory=list)
    regions: List[List[int]] = field(default_factory=list)
    full_region: bool = False
    times: List[float] = field(default_factory=list)
    b_times: List[float] = field(default_factory=list)
    steps: List[int] = field(default_factory=list)
    sizes: List[int] = field(default_factory=list)
    size_steps: Optional[int] = None
    samples: int = 5
    pairs: int = 20
    jumps: int = 1
    max_sites: int = 5
    control_terms: List[TermSpec] = field(default_factory=list)

    def end_time(self, b: float) -> float:
        """t, or s + b_dt / b when the duration is given in units of 1/b."""
        if self.t is not None:
            return self.t
        if b <= 0:
            raise ModelInvalid("b·(t − s) needs a nonzero Liouvillian")
        return self.s + self.b_dt / b

    def time_grid(self, b: float) -> List[float]:
        if self.times:
            return list(self.times)
        return [self.s + x / b for x in self.b_times]


@dataclass
class BoundsSpec:
    v: Optional[float] = None
    C: Optional[float] = None
    mu: Union[int, Auto] = 1
    M: Union[float, Auto, None] = "auto"
    constant: float = 1.0


@dataclass
class ExperimentConfig:
    name: str
    kind: ExperimentKind
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    model: Optional[ModelSpec] = None
    fermion_model: Optional[FermionModelSpec] = None
    observables: Dict[str, ObservableSpec] = field(default_factory=dict)
    allow_odd: bool = False
    state: str = "zero"
    grid: GridSpec = field(default_factory=GridSpec)
    bounds: BoundsSpec = field(default_factory=BoundsSpec)
    verdict: Dict[str, float] = field(default_factory=dict)
    output_dir: Optional[str] = None
    path: Optional[str] = None

    def observable(self, key: str) -> ObservableSpec:
        try:
            return self.observables[key]
        except KeyError:
            raise ConfigParse("Missing observable", field=f"observables.{key}") from None


# --- Parsing ---

_LINE_RE = re.compile(r"line (\d+)")
_HEADER_RE = re.compile(r'^\s*(\[\[?)\s*([A-Za-z_"][A-Za-z0-9_."\- ]*?)\s*\]\]?\s*(?:#.*)?$')
_KEY_RE = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


def locate_field(text: str, field: str) -> Optional[int]:
    """1-based line of the deepest table header or key on the path to `field`, e.g. "model.terms[1].schedule"."""
    target = field.split(".")
    arrays: Dict[str, int] = {}
    table = ""
    best, best_depth = None, 0
    for number, raw in enumerate(text.splitlines(), start=1):
        header = _HEADER_RE.match(raw)
        if header:
            table = _resolve_header(header.group(2), arrays, header.group(1) == "[[")
            path = table
        else:
            key = _KEY_RE.match(raw)
            if not key:
                continue
            path = f"{table}.{key.group(1)}" if table else key.group(1)
        segments = path.split(".")
        if target[:len(segments)] == segments and len(segments) > best_depth:
            best, best_depth = number, len(segments)
    return best


def _resolve_header(name: str, arrays: Dict[str, int], is_array: bool) -> str:
    """Dotted header name with array-of-tables indices, e.g. model.terms -> model.terms[2]."""
    parts = [p.strip().strip('"') for p in name.split(".")]
    resolved = []
    for i, part in enumerate(parts):
        prefix = ".".join(parts[:i + 1])
        if is_array and i == len(parts) - 1:
            arrays[prefix] = arrays.get(prefix, -1) + 1
        if prefix in arrays:
            part = f"{part}[{arrays[prefix]}]"
        resolved.append(part)
    return ".".join(resolved)


class ConfigParser:
    """Reads experiment TOML files into ExperimentConfig, or into diagnostics when validating."""

    def __init__(self, factory: Optional[TermFactory] = None):
        self.factory = factory or TermFactory()

    def load(self, path: str) -> Dict[str, Any]:
        if not os.path.exists(path):
            raise ConfigParse(f"Config file not found: {path}")
        try:
            with open(path, "rb") as f:
                return tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            match = _LINE_RE.search(str(e))
            raise ConfigParse(f"Malformed TOML: {e}", line=int(match.group(1)) if match else None) from None

    def parse(self, path: str) -> ExperimentConfig:
        data = self.load(path)
        try:
            config = self.parse_dict(data)
        except ConfigParse as e:
            if e.line is not None or not e.field:
                raise
            with open(path, encoding="utf-8") as f:
                line = locate_field(f.read(), e.field)
            raise ConfigParse(e.message, e.field, line) from None
        config.path = path
        logger.debug(f"Parsed config '{config.name}' ({config.kind.value}) from {path}")
        return config

    def parse_dict(self, data: Dict[str, Any]) -> ExperimentConfig:
        experiment = _table(data, "experiment", required=True)
        name = _get(experiment, "name", str, "experiment.name", required=True)
        kind_raw = _get(experiment, "kind", str, "experiment.kind", required=True)
        try:
            kind = ExperimentKind(kind_raw)
        except ValueError:
            known = ", ".join(k.value for k in ExperimentKind)
            raise ConfigParse(f"Unknown experiment kind '{kind_raw}' (known: {known})", field="experiment.kind") from None
        tolerance = float(_get(experiment, "tolerance", (int, float), "experiment.tolerance", DEFAULT_TOLERANCE))
        if tolerance <= 0:
            raise ConfigParse("Tolerance must be positive", field="experiment.tolerance")

        observables_table = _table(data, "observables")
        config = ExperimentConfig(
            name=name,
            kind=kind,
            seed=int(_get(experiment, "seed", int, "experiment.seed", 0)),
            tolerance=tolerance,
            model=self._parse_model(data["model"]) if "model" in data else None,
            fermion_model=self._parse_fermion_model(data["fermion_model"]) if "fermion_model" in data else None,
            observables={k: self._parse_observable(v, f"observables.{k}")
                         for k, v in observables_table.items() if isinstance(v, dict)},
            allow_odd=bool(observables_table.get("allow_odd", False)),
            state=str(_table(data, "state").get("kind", "zero")),
            grid=self._parse_grid(_table(data, "grid")),
            bounds=self._parse_bounds(_table(data, "bounds")),
            verdict={k: float(v) for k, v in _table(data, "verdict").items()},
            output_dir=_table(data, "output").get("dir"),
        )
        self._check_requirements(config)
        return config

    def validate(self, path: str) -> List[Diagnostic]:
        """Every problem that would stop `run`, without executing the experiment; empty iff runnable."""
        try:
            config = self.parse(path)
        except ConfigParse as e:
            return [Diagnostic("ConfigParse", str(e), e.field)]
        except LocalityError as e:
            return [Diagnostic(type(e).__name__, str(e))]
        except (ValueError, TypeError) as e:
            return [Diagnostic("ConfigParse", str(e))]
        return self.diagnose(config)

    def diagnose(self, config: ExperimentConfig, build_model: bool = True) -> List[Diagnostic]:
        """Cross-references of a parsed config; `build_model=False` skips assembling the Liouvillian."""
        diagnostics: List[Diagnostic] = []
        g = None
        if config.model is not None:
            try:
                g = config.model.graph()
                if build_model:
                    config.model.liouvillian(self.factory)
                else:
                    for spec in config.model.terms:
                        for support in spec.resolve_supports(g):
                            g.check_vertices(support)
            except (LocalityError, ValueError) as e:
                diagnostics.append(Diagnostic(type(e).__name__, str(e), "model"))
        if config.fermion_model is not None:
            N = config.fermion_model.sites
            for support, poly, _ in config.fermion_model.terms:
                if parity_of(poly) != Parity.EVEN:
                    diagnostics.append(Diagnostic("OddParity", f"Hamiltonian term on {list(support)} is odd",
                                                  "fermion_model.terms"))
                for j in poly.sites:
                    if not 1 <= j <= N:
                        diagnostics.append(Diagnostic("IndexOutOfRange", f"Site {j} outside 1..{N}",
                                                      "fermion_model.terms"))
        for key, spec in config.observables.items():
            where = f"observables.{key}"
            if spec.is_fermionic:
                N = config.fermion_model.sites if config.fermion_model else 0
                for poly in spec.polynomials:
                    if parity_of(poly) != Parity.EVEN and not config.allow_odd:
                        diagnostics.append(Diagnostic("OddParity", f"Observable {poly} is {parity_of(poly).value}",
                                                      where))
                    if any(not 1 <= j <= N for j in poly.sites):
                        diagnostics.append(Diagnostic("IndexOutOfRange", f"Observable {poly} leaves 1..{N}", where))
            elif g is not None:
                unknown = [v for v in spec.sites if v not in g.vertices]
                if unknown:
                    diagnostics.append(Diagnostic("UnknownVertex", f"Sites {unknown} are not model vertices", where))
        if g is not None:
            for region in config.grid.regions:
                unknown = [v for v in region if v not in g.vertices]
                if unknown:
                    diagnostics.append(Diagnostic("UnknownVertex", f"Region sites {unknown} are not model vertices",
                                                  "grid.regions"))
        return diagnostics

    # --- Private Helpers ---

    def _parse_model(self, table: Dict[str, Any]) -> ModelSpec:
        hyperedges = table.get("hyperedges")
        spec = ModelSpec(
            lattice=str(table.get("lattice", "chain")),
            sites=_get(table, "sites", int, "model.sites"),
            side=_get(table, "side", int, "model.side"),
            vertices=table.get("vertices"),
            hyperedges=[tuple(e) for e in hyperedges] if hyperedges is not None else None,
            local_dims=table.get("local_dims", 2),
            with_site_edges=bool(table.get("site_edges", False)),
            terms=[self._parse_term(t, f"model.terms[{i}]") for i, t in enumerate(table.get("terms", []))],
        )
        if spec.lattice not in ("chain", "square", "figure"):
            raise ConfigParse(f"Unknown lattice '{spec.lattice}'", field="model.lattice")
        if spec.sites is not None and spec.sites < 1:
            raise ConfigParse("A chain needs at least one site", field="model.sites")
        return spec

    def _parse_term(self, table: Dict[str, Any], where: str) -> TermSpec:
        supports = table.get("supports")
        if supports is None:
            raise ConfigParse("Term needs 'supports'", field=f"{where}.supports")
        if isinstance(supports, str) and supports not in ("edges", "sites"):
            raise ConfigParse(f"supports must be 'edges', 'sites' or a list, got '{supports}'",
                              field=f"{where}.supports")
        builder = table.get("builder")
        hamiltonian = table.get("hamiltonian")
        jumps = table.get("jumps", [])
        if builder is None and hamiltonian is None and not jumps:
            raise ConfigParse("Term needs a builder or explicit matrices", field=where)
        if builder is not None and builder not in self.factory.names():
            raise ConfigParse(f"Unknown builder '{builder}'", field=f"{where}.builder")
        return TermSpec(
            supports=supports if isinstance(supports, str) else [tuple(s) for s in supports],
            builder=builder,
            hamiltonian=_matrix(hamiltonian, f"{where}.hamiltonian") if hamiltonian is not None else None,
            jumps=[_matrix(m, f"{where}.jumps[{i}]") for i, m in enumerate(jumps)],
            coefficient=float(table.get("coefficient", 1.0)),
            schedule=_schedule(table.get("schedule"), f"{where}.schedule"),
        )

    def _parse_fermion_model(self, table: Dict[str, Any]) -> FermionModelSpec:
        N = _get(table, "sites", int, "fermion_model.sites", required=True)
        spec = FermionModelSpec(sites=N)
        if "hopping" in table:
            for support, poly in hopping_chain(N, float(table["hopping"]), float(table.get("mu", 0.0))):
                spec.terms.append((support, poly, CONSTANT_ONE))
        for i, term in enumerate(table.get("terms", [])):
            where = f"fermion_model.terms[{i}]"
            support = tuple(_get(term, "support", list, f"{where}.support", required=True))
            spec.terms.append((support, _polynomial(term.get("monomials", []), where),
                               _schedule(term.get("schedule"), f"{where}.schedule")))
        return spec

    def _parse_observable(self, table: Dict[str, Any], where: str) -> ObservableSpec:
        if "number" in table:
            sites = table["number"] if isinstance(table["number"], list) else [table["number"]]
            return ObservableSpec(polynomials=[number_op(int(j)) for j in sites])
        if "monomials" in table:
            return ObservableSpec(polynomials=[_polynomial(table["monomials"], where)])
        if "staggered" in table:
            return ObservableSpec(staggered=str(table["staggered"]))
        label = _get(table, "pauli", str, f"{where}.pauli", required=True)
        if label.upper() not in ("I", "X", "Y", "Z"):
            raise ConfigParse(f"Unknown Pauli label '{label}'", field=f"{where}.pauli")
        sites = table.get("sites", [table["site"]] if "site" in table else None)
        if not sites:
            raise ConfigParse("Observable needs 'site' or 'sites'", field=where)
        return ObservableSpec(pauli=label.upper(), sites=list(sites))

    def _parse_grid(self, table: Dict[str, Any]) -> GridSpec:
        grid = GridSpec(
            s=float(table.get("s", 0.0)),
            t=float(table["t"]) if "t" in table else None,
            b_dt=float(table["b_dt"]) if "b_dt" in table else None,
            r=float(table["r"]) if "r" in table else None,
            radii=[int(x) for x in table.get("radii", [])],
            regions=[list(r) for r in table.get("regions", [])],
            full_region=bool(table.get("full_region", False)),
            times=[float(x) for x in table.get("times", [])],
            b_times=[float(x) for x in table.get("b_times", [])],
            steps=[int(x) for x in table.get("steps", [])],
            sizes=[int(x) for x in table.get("sizes", [])],
            size_steps=int(table["size_steps"]) if "size_steps" in table else None,
            samples=int(table.get("samples", 5)),
            pairs=int(table.get("pairs", 20)),
            jumps=int(table.get("jumps", 1)),
            max_sites=int(table.get("max_sites", 5)),
            control_terms=[self._parse_term(t, f"grid.control_terms[{i}]")
                           for i, t in enumerate(table.get("control_terms", []))],
        )
        if grid.t is not None and grid.t < grid.s:
            raise ConfigParse(f"End time t={grid.t} precedes start time s={grid.s}", field="grid.t")
        if grid.b_dt is not None and grid.b_dt < 0:
            raise ConfigParse("b_dt must be non-negative", field="grid.b_dt")
        if any(t < grid.s for t in grid.times):
            raise ConfigParse("Every time in grid.times must be >= s", field="grid.times")
        if any(x < 0 for x in grid.b_times):
            raise ConfigParse("grid.b_times must be non-negative", field="grid.b_times")
        for key in ("times", "b_times"):
            values = getattr(grid, key)
            if len(set(values)) != len(values):
                raise ConfigParse(f"grid.{key} lists a time twice", field=f"grid.{key}")
        if grid.r is not None and not (grid.s <= grid.r <= (grid.t if grid.t is not None else math.inf)):
            raise ConfigParse("Intermediate time r must satisfy s <= r <= t", field="grid.r")
        if any(n < 1 for n in grid.steps):
            raise ConfigParse("Trotter step counts must be >= 1", field="grid.steps")
        if grid.samples < 1:
            raise ConfigParse("grid.samples must be >= 1", field="grid.samples")
        if any(n < 2 for n in grid.sizes):
            raise ConfigParse("Chain sizes need at least two sites", field="grid.sizes")
        return grid

    def _parse_bounds(self, table: Dict[str, Any]) -> BoundsSpec:
        bounds = BoundsSpec(
            v=_auto_or_float(table.get("v"), "bounds.v"),
            C=_auto_or_float(table.get("C"), "bounds.C"),
            mu=table.get("mu", 1),
            M=table.get("M", "auto"),
            constant=float(table.get("constant", 1.0)),
        )
        if bounds.mu != "auto" and (not isinstance(bounds.mu, int) or bounds.mu < 1):
            raise ConfigParse("mu must be a positive integer or \"auto\"", field="bounds.mu")
        if bounds.M != "auto" and not isinstance(bounds.M, (int, float)):
            raise ConfigParse("M must be a number or \"auto\"", field="bounds.M")
        for key in ("v", "C"):
            value = getattr(bounds, key)
            if value is not None and value <= 0:
                raise ConfigParse(f"{key} must be positive", field=f"bounds.{key}")
        return bounds

    def _check_requirements(self, config: ExperimentConfig):
        kind = config.kind
        spin_kinds = {ExperimentKind.LEAKAGE_VS_DISTANCE, ExperimentKind.TRUNCATION_VS_BUFFER,
                      ExperimentKind.COVARIANCE_CONE, ExperimentKind.TROTTER_ORDER, ExperimentKind.PICTURE_DUALITY,
                      ExperimentKind.CPTP_AUDIT, ExperimentKind.COMPOSITION_ADJOINT, ExperimentKind.GRAPH_METRICS}
        if kind in spin_kinds and config.model is None:
            raise ConfigParse(f"Experiment kind '{kind.value}' needs a [model] section", field="model")
        if kind in (ExperimentKind.FERMIONIC_CONE, ExperimentKind.JW_IDENTITY_SUITE) and config.fermion_model is None:
            raise ConfigParse(f"Experiment kind '{kind.value}' needs a [fermion_model] section", field="fermion_model")
        needs_time = {ExperimentKind.LEAKAGE_VS_DISTANCE, ExperimentKind.TRUNCATION_VS_BUFFER,
                      ExperimentKind.TROTTER_ORDER, ExperimentKind.PICTURE_DUALITY, ExperimentKind.CPTP_AUDIT,
                      ExperimentKind.COMPOSITION_ADJOINT, ExperimentKind.FERMIONIC_CONE}
        if kind in needs_time and config.grid.t is None and config.grid.b_dt is None:
            raise ConfigParse("Give the end time as grid.t or grid.b_dt", field="grid.t")
        needs_ab = {ExperimentKind.LEAKAGE_VS_DISTANCE, ExperimentKind.COVARIANCE_CONE, ExperimentKind.FERMIONIC_CONE}
        if kind in needs_ab:
            config.observable("a")
            config.observable("b")
        if kind in (ExperimentKind.TRUNCATION_VS_BUFFER, ExperimentKind.TROTTER_ORDER):
            config.observable("a")
        if kind == ExperimentKind.TROTTER_ORDER and not config.grid.steps:
            raise ConfigParse("Trotter experiments need grid.steps", field="grid.steps")
        if kind == ExperimentKind.TRUNCATION_VS_BUFFER and not (config.grid.radii or config.grid.regions):
            raise ConfigParse("Truncation experiments need grid.radii or grid.regions", field="grid.radii")
        if kind == ExperimentKind.COVARIANCE_CONE and not (config.grid.times or config.grid.b_times):
            raise ConfigParse("Covariance experiments need grid.times or grid.b_times", field="grid.times")


# --- Value helpers ---

def _table(data: Dict[str, Any], key: str, required: bool = False) -> Dict[str, Any]:
    value = data.get(key)
    if value is None:
        if required:
            raise ConfigParse(f"Missing [{key}] section", field=key)
        return {}
    if not isinstance(value, dict):
        raise ConfigParse(f"[{key}] must be a table", field=key)
    return value


def _get(table: Dict[str, Any], key: str, types, where: str, default: Any = None, required: bool = False):
    if key not in table:
        if required:
            raise ConfigParse("Missing required value", field=where)
        return default
    value = table[key]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in _as_tuple(types):
        raise ConfigParse(f"Wrong type {type(value).__name__}", field=where)
    return value


def _as_tuple(types) -> tuple:
    return types if isinstance(types, tuple) else (types,)


def _auto_or_float(value: Any, where: str) -> Optional[float]:
    if value is None or value == "auto":
        return None
    if not isinstance(value, (int, float)):
        raise ConfigParse("Expected a number or \"auto\"", field=where)
    return float(value)


def _complex(entry: Any, where: str) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, list) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise ConfigParse(f"Matrix entries are numbers or [re, im] pairs, got {entry!r}", field=where)


def _matrix(rows: Any, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigParse("Matrix must be a list of rows", field=where)
    if any(len(r) != len(rows) for r in rows):
        raise ConfigParse("Matrix must be square", field=where)
    return np.array([[_complex(x, where) for x in r] for r in rows], dtype=complex)


def _schedule(table: Optional[Dict[str, Any]], where: str) -> TimeSchedule:
    if table is None:
        return CONSTANT_ONE
    try:
        if "constant" in table:
            return TimeSchedule.constant(float(table["constant"]))
        pieces = table.get("pieces")
        if not pieces:
            raise ConfigParse("Schedule needs 'constant' or 'pieces'", field=where)
        return TimeSchedule.piecewise(
            (float(p.get("start", -math.inf)), float(p.get("end", math.inf)), [float(c) for c in p["poly"]])
            for p in pieces)
    except ConfigParse:
        raise
    except LocalityError as e:
        raise ConfigParse(str(e), field=where) from None
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigParse(f"Malformed schedule: {e}", field=where) from None


def _polynomial(monomials: Sequence[Dict[str, Any]], where: str) -> FermionPolynomial:
    out = []
    for i, m in enumerate(monomials):
        factors = m.get("factors")
        if factors is None:
            raise ConfigParse("Monomial needs 'factors'", field=f"{where}.monomials[{i}]")
        try:
            out.append(FermionMonomial.from_signed([int(j) for j in factors],
                                                   _complex(m.get("coefficient", 1.0), where)))
        except FermionError as e:
            raise ConfigParse(str(e), field=f"{where}.monomials[{i}]") from None
    return FermionPolynomial(tuple(out))
