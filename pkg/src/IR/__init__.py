from .models import (
    BoundParameters,
    BoundPoint,
    BoundReport,
    Diagnostic,
    DistanceResult,
    ExperimentKind,
    ExperimentResult,
    INFINITE_DISTANCE,
    ParameterSource,
    Parity,
    Picture,
)
