import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.stats import linregress

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS: Dict[str, float] = {
    "slope_max": -0.8,
    "r2_min": 0.98,
    "order_min": -1.3,
    "order_max": -0.7,
    "full_region_max": 1e-9,
    "initial_max": 1e-12,
    "cone_max": 1e-3,
    "commuting_max": 1e-9,
    "duality_max": 1e-8,
    "composition_max": 1e-8,
    "adjoint_max": 1e-8,
    "choi_min": -1e-9,
    "trace_max": 1e-9,
    "identity_max": 1e-12,
    "homomorphism_max": 1e-11,
    "spectrum_max": 1e-9,
}


def thresholds(overrides: Optional[Dict[str, float]] = None) -> Dict[str, float]:
    merged = dict(DEFAULT_THRESHOLDS)
    merged.update(overrides or {})
    return merged


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r_squared: float
    points: int

    @property
    def ok(self) -> bool:
        return not math.isnan(self.slope)


NO_FIT = Fit(math.nan, math.nan, math.nan, 0)


def _fit(x: np.ndarray, y: np.ndarray, what: str) -> Fit:
    mask = np.isfinite(x) & np.isfinite(y) & (y > 0)
    dropped = int(len(x) - mask.sum())
    if dropped:
        logger.warning(f"{what} fit: dropping {dropped} non-positive or non-finite points")
    if mask.sum() < 2:
        logger.warning(f"{what} fit needs at least two positive points, got {int(mask.sum())}")
        return NO_FIT
    result = linregress(x[mask], np.log(y[mask]))
    r2 = float(result.rvalue ** 2)
    return Fit(float(result.slope), float(result.intercept), r2, int(mask.sum()))


def log_linear_fit(x: Sequence[float], y: Sequence[float]) -> Fit:
    """Least squares on log(y) = slope·x + intercept."""
    return _fit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), "Log-linear")


def log_log_fit(x: Sequence[float], y: Sequence[float]) -> Fit:
    """Least squares on log(y) = slope·log(x) + intercept."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return _fit(np.log(x), np.asarray(y, dtype=float), "Log-log")
