from typing import List, Optional


class LocalityError(Exception):
    """Root of every error raised by the simulator."""


# --- Lattice graph ---

class GraphError(LocalityError, ValueError):
    pass


class EmptyEdge(GraphError):
    pass


class UnknownVertex(GraphError):
    pass


class BadDimension(GraphError):
    pass


class EmptySet(GraphError):
    pass


class NotAnEdge(GraphError):
    pass


class NoEdges(GraphError):
    pass


class Disconnected(GraphError):
    pass


# --- Operators ---

class OperatorError(LocalityError, ValueError):
    pass


class DimensionMismatch(OperatorError):
    pass


class NotHermitian(OperatorError):
    pass


class NotAState(OperatorError):
    pass


# --- Liouvillian model ---

class ModelError(LocalityError, ValueError):
    pass


class TimeOutsideSchedule(ModelError):
    pass


class SupportNotInGraph(ModelError):
    pass


class UnknownBuilder(ModelError):
    pass


# --- Propagation ---

class PropagationError(LocalityError, RuntimeError):
    pass


class BadInterval(PropagationError):
    pass


class ToleranceNotMet(PropagationError):
    pass


class TooLarge(PropagationError):
    pass


# --- Fermions ---

class FermionError(LocalityError, ValueError):
    pass


class IndexOutOfRange(FermionError):
    pass


class OddParity(FermionError):
    pass


# --- Config / runner ---

class ConfigError(LocalityError):
    pass


class ConfigParse(ConfigError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.message = message
        self.field = field
        self.line = line


class ModelInvalid(ConfigError):
    pass


class ExperimentFailed(ConfigError):
    def __init__(self, message: str, report_paths: Optional[List[str]] = None):
        super().__init__(message)
        self.report_paths = report_paths or []
