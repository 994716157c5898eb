import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.errors import BadInterval, DimensionMismatch, ToleranceNotMet
from src.IR.models import Picture
from src.model.liouvillian import LocalLiouvillian
from src.operators.core import DEFAULT_TOL, GlobalOperator, StateOperator, op_norm

logger = logging.getLogger(__name__)

STEPS_PER_UNIT_B = 8
MAX_STEPS_PER_SEGMENT = 2 ** 16

RightHandSide = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PropagationRequest:
    liouvillian: LocalLiouvillian
    initial: GlobalOperator
    s: float
    t: float
    picture: Picture = Picture.SCHRODINGER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.t < self.s:
            raise BadInterval(f"End time {self.t} precedes start time {self.s}")
        if self.tol <= 0:
            raise ValueError(f"Integration tolerance must be positive, got {self.tol}")
        if self.initial.dim != self.liouvillian.graph.hilbert_dim:
            raise DimensionMismatch(f"Operator dimension {self.initial.dim} does not match the Liouvillian's "
                                    f"Hilbert dimension {self.liouvillian.graph.hilbert_dim}")

    def run(self) -> GlobalOperator:
        matrix = integrate(self.liouvillian, self.initial.matrix, self.s, self.t, self.picture, self.tol)
        return self.initial.with_matrix(matrix, self.initial.declared_support if self.liouvillian.is_zero else None)


def rk4_fixed(f: RightHandSide, y: np.ndarray, start: float, stop: float, n: int) -> np.ndarray:
    """n classical Runge-Kutta steps from `start` to `stop`; `stop < start` integrates backwards."""
    h = (stop - start) / n
    for k in range(n):
        tk = start + k * h
        k1 = f(tk, y)
        k2 = f(tk + h / 2, y + (h / 2) * k1)
        k3 = f(tk + h / 2, y + (h / 2) * k2)
        k4 = f(tk + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def spectral_norm_bound(y: np.ndarray) -> float:
    """sqrt(‖y‖_1 ‖y‖_inf), an upper bound on the spectral norm that costs one pass over y."""
    a = np.abs(y)
    return float(math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))


def _integrate_segment(f: RightHandSide, y: np.ndarray, start: float, stop: float, n: int,
                       tol: float, scale: float) -> Tuple[np.ndarray, int]:
    """Step doubling: accept y_2n once the Richardson estimate |y_2n - y_n|/15 meets the budget."""
    budget = tol * abs(stop - start) * max(scale, np.finfo(float).tiny)
    coarse = rk4_fixed(f, y, start, stop, n)
    while True:
        fine = rk4_fixed(f, y, start, stop, 2 * n)
        error = spectral_norm_bound(fine - coarse) / 15
        if error <= budget:
            logger.debug(f"Segment [{start:.6g}, {stop:.6g}] accepted with {2 * n} steps (est. error {error:.3e})")
            return fine, 2 * n
        if 2 * n >= MAX_STEPS_PER_SEGMENT:
            raise ToleranceNotMet(f"Error estimate {error:.3e} above {budget:.3e} after {2 * n} steps "
                                  f"on [{start:.6g}, {stop:.6g}]")
        n *= 2
        coarse = fine


def integrate(L: LocalLiouvillian, y0: np.ndarray, s: float, t: float, picture: Picture,
              tol: float = DEFAULT_TOL, backward: Optional[bool] = None) -> np.ndarray:
    """
    Solves the master equation on [s, t] for a dense matrix.

    Schrödinger: dρ/dt = L_t†(ρ) forward from s. Heisenberg: dA/dσ = L_{t-σ}(A) for σ in [0, t - s],
    starting from A at time t. Schedule breakpoints are always step boundaries, and every segment
    evaluates coefficients on the piece containing its midpoint.
    `backward=False` in the Heisenberg picture integrates forward from s instead.
    """
    if t < s:
        raise BadInterval(f"End time {t} precedes start time {s}")
    if backward is None:
        backward = picture == Picture.HEISENBERG
    y = np.array(y0, dtype=complex)
    if t == s or L.is_zero:
        return y

    segments = L.segments(s, t)
    scale = op_norm(y)
    sign = -1.0 if backward else 1.0
    total_steps = 0
    for a, b in (reversed(segments) if backward else segments):
        anchor = (a + b) / 2

        def f(tau, A, anchor=anchor):
            return sign * L.apply(tau, A, picture, anchor=anchor)

        n = max(1, math.ceil((b - a) * L.b * STEPS_PER_UNIT_B))
        start, stop = (b, a) if backward else (a, b)
        y, steps = _integrate_segment(f, y, start, stop, n, tol, scale)
        total_steps += steps
    logger.debug(f"Integrated {picture.value} equation over [{s:.6g}, {t:.6g}] in {total_steps} steps")
    return y


def propagate_state(L: LocalLiouvillian, rho: GlobalOperator, s: float, t: float,
                    tol: float = DEFAULT_TOL) -> StateOperator:
    """ρ_s(t) = T(t, s)(ρ)."""
    if not isinstance(rho, StateOperator):
        rho = StateOperator.from_operator(rho)
    result = PropagationRequest(L, rho, s, t, Picture.SCHRODINGER, tol).run()
    matrix = result.matrix
    return StateOperator((matrix + matrix.conj().T) / 2, rho.graph)


def propagate_observable(L: LocalLiouvillian, A: GlobalOperator, s: float, t: float,
                         tol: float = DEFAULT_TOL) -> GlobalOperator:
    """A_t(s) = τ(s, t)(A), the backward-evolved observable."""
    return PropagationRequest(L, A, s, t, Picture.HEISENBERG, tol).run()
