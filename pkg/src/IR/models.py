from dataclasses import dataclass, field
from functools import total_ordering
from typing import Dict, List, Optional, Any
from enum import Enum
import json
import math


class Picture(Enum):
    SCHRODINGER = "schrodinger"
    HEISENBERG = "heisenberg"


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"


class ExperimentKind(Enum):
    LEAKAGE_VS_DISTANCE = "leakage_vs_distance"
    TRUNCATION_VS_BUFFER = "truncation_vs_buffer"
    COVARIANCE_CONE = "covariance_cone"
    TROTTER_ORDER = "trotter_order"
    PICTURE_DUALITY = "picture_duality"
    CPTP_AUDIT = "cptp_audit"
    JW_IDENTITY_SUITE = "jw_identity_suite"
    FERMIONIC_CONE = "fermionic_cone"
    COMPOSITION_ADJOINT = "composition_adjoint"
    GRAPH_METRICS = "graph_metrics"


class ParameterSource(Enum):
    CONFIGURED = "configured"
    DEFAULT = "default"


@total_ordering
@dataclass(frozen=True)
class DistanceResult:
    """Hypergraph distance; `value` is None for +inf (disconnected sets)."""
    value: Optional[int]

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __float__(self) -> float:
        return math.inf if self.value is None else float(self.value)

    def __eq__(self, other):
        if isinstance(other, DistanceResult):
            return self.value == other.value
        if isinstance(other, (int, float)):
            return float(self) == float(other)
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, (DistanceResult, int, float)):
            return float(self) < float(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        return "inf" if self.value is None else str(self.value)

    def __repr__(self):
        return f"DistanceResult({self})"


INFINITE_DISTANCE = DistanceResult(None)


@dataclass(frozen=True)
class BoundParameters:
    v: float
    C: float
    source: ParameterSource = ParameterSource.CONFIGURED

    def __post_init__(self):
        if not (self.v > 0 and self.C > 0):
            raise ValueError(f"Bound parameters must be positive, got v={self.v}, C={self.C}")

    def to_dict(self) -> Dict[str, Any]:
        return {"v": self.v, "C": self.C, "source": self.source.value}


@dataclass
class BoundPoint:
    abscissa: float
    measured: float
    envelope: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_tuple(self):
        return (self.abscissa, self.measured, self.envelope)

    def __str__(self):
        env = f" <= {self.envelope:.3e}" if self.envelope is not None else ""
        return f"({self.abscissa:g}: {self.measured:.3e}{env})"

    def __repr__(self):
        return self.__str__()


@dataclass
class BoundReport:
    """A measured decay series with its fit and verdicts."""
    name: str
    abscissa_label: str
    grid: List[BoundPoint] = field(default_factory=list)
    fitted_rate: float = math.nan
    fitted_intercept: float = math.nan
    r_squared: float = math.nan
    verdict: Dict[str, bool] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for point in self.grid:
            if point.measured < 0:
                raise ValueError(f"Measured value must be non-negative, got {point.measured}")
        abscissae = [p.abscissa for p in self.grid]
        if any(b <= a for a, b in zip(abscissae, abscissae[1:])):
            raise ValueError(f"Report abscissae must be strictly increasing: {abscissae}")

    @property
    def passed(self) -> bool:
        return all(self.verdict.values())

    @property
    def abscissae(self) -> List[float]:
        return [p.abscissa for p in self.grid]

    @property
    def measured(self) -> List[float]:
        return [p.measured for p in self.grid]

    def below_envelope(self) -> bool:
        return all(p.measured <= p.envelope for p in self.grid if p.envelope is not None)

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "abscissa": self.abscissa_label,
            "points": len(self.grid),
            "fitted_rate": self.fitted_rate,
            "fitted_intercept": self.fitted_intercept,
            "r_squared": self.r_squared,
            "verdict": dict(self.verdict),
            "passed": self.passed,
            "parameters": self.parameters,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {len(self.grid)} points vs {self.abscissa_label}, rate={self.fitted_rate:.3f}"

    def __repr__(self):
        return self.__str__()


@dataclass
class Diagnostic:
    code: str
    message: str
    field: Optional[str] = None

    def to_tuple(self):
        return (self.code, self.field, self.message)

    def __str__(self):
        where = f" [{self.field}]" if self.field else ""
        return f"{self.code}{where}: {self.message}"

    def __repr__(self):
        return self.__str__()


@dataclass
class ExperimentResult:
    name: str
    kind: ExperimentKind
    reports: List[BoundReport] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and all(r.passed for r in self.reports)

    def to_json(self, wall_time: Optional[float] = None) -> str:
        payload = {
            "name": self.name,
            "kind": self.kind.value,
            "passed": self.passed,
            "checks": self.checks,
            "metrics": self.metrics,
            "reports": [r.summary() for r in self.reports],
        }
        if wall_time is not None:
            payload["wall_time_seconds"] = wall_time
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, DistanceResult):
        return obj.value if obj.value is not None else "inf"
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")
