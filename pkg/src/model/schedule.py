import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from src.errors import ModelError, TimeOutsideSchedule

SAMPLES_PER_PIECE = 64


@dataclass(frozen=True, eq=False)
class SchedulePiece:
    """Coefficient polynomial (in absolute time t) on the left-closed interval [start, end)."""
    start: float
    end: float
    poly: Polynomial

    @property
    def is_constant(self) -> bool:
        return self.poly.trim().degree() == 0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.poly.coef)

    def __call__(self, t: float) -> float:
        return float(self.poly(t))


class TimeSchedule:
    """
    Piecewise-polynomial scalar schedule, right-continuous at breakpoints.

    The final finite end point is included so that evolutions may stop exactly there.
    """

    def __init__(self, pieces: Sequence[SchedulePiece]):
        if not pieces:
            raise ModelError("A schedule needs at least one piece")
        for piece in pieces:
            if not piece.start < piece.end:
                raise ModelError(f"Schedule piece [{piece.start}, {piece.end}) is empty")
            if not piece.is_constant and not (math.isfinite(piece.start) and math.isfinite(piece.end)):
                raise ModelError("Non-constant schedule pieces must have finite extent")
        for a, b in zip(pieces, pieces[1:]):
            if b.start < a.end:
                raise ModelError(f"Schedule pieces overlap or are out of order at t={b.start}")
        self._pieces = tuple(pieces)

    @classmethod
    def constant(cls, value: float = 1.0) -> "TimeSchedule":
        return cls([SchedulePiece(-math.inf, math.inf, Polynomial([value]))])

    @classmethod
    def piecewise(cls, pieces: Iterable[Tuple[float, float, Sequence[float]]]) -> "TimeSchedule":
        """Builds from (start, end, [c0, c1, ...]) triples, c(t) = c0 + c1 t + ..."""
        return cls([SchedulePiece(float(a), float(b), Polynomial(list(coef))) for a, b, coef in pieces])

    @property
    def pieces(self) -> Tuple[SchedulePiece, ...]:
        return self._pieces

    @property
    def is_time_independent(self) -> bool:
        values = {round(p(0.0), 15) for p in self._pieces}
        covers = (self._pieces[0].start == -math.inf and self._pieces[-1].end == math.inf
                  and all(a.end == b.start for a, b in zip(self._pieces, self._pieces[1:])))
        return covers and all(p.is_constant for p in self._pieces) and len(values) == 1

    @property
    def is_identically_zero(self) -> bool:
        return all(p.is_zero for p in self._pieces)

    def piece_at(self, t: float) -> SchedulePiece:
        for piece in self._pieces:
            if piece.start <= t < piece.end:
                return piece
        last = self._pieces[-1]
        if t == last.end:
            return last
        raise TimeOutsideSchedule(f"Time {t} is not covered by the schedule")

    def __call__(self, t: float) -> float:
        return self.piece_at(t)(t)

    def value(self, t: float, anchor: Optional[float] = None) -> float:
        """Coefficient at t using the piece that contains `anchor` (left limits at a piece's end)."""
        if anchor is None:
            return self(t)
        piece = self.piece_at(anchor)
        if not (piece.start <= t <= piece.end):
            raise TimeOutsideSchedule(f"Time {t} lies outside the piece containing {anchor}")
        return piece(t)

    def breakpoints(self, s: float = -math.inf, t: float = math.inf) -> List[float]:
        points = set()
        for piece in self._pieces:
            for edge in (piece.start, piece.end):
                if math.isfinite(edge) and s < edge < t:
                    points.add(edge)
        return sorted(points)

    def sample_times(self) -> List[float]:
        """64 points per piece plus every breakpoint; a single point for unbounded constant pieces."""
        times = set()
        for piece in self._pieces:
            if math.isfinite(piece.start) and math.isfinite(piece.end):
                times.update(np.linspace(piece.start, piece.end, SAMPLES_PER_PIECE, endpoint=False).tolist())
            elif math.isfinite(piece.start):
                times.add(piece.start)
            elif math.isfinite(piece.end):
                times.add(np.nextafter(piece.end, -math.inf))
            else:
                times.add(0.0)
        times.update(self.breakpoints())
        return sorted(times)

    def sample_values(self) -> List[float]:
        """Schedule magnitudes over the sample grid, including left limits at piece ends."""
        values = [abs(self(t)) for t in self.sample_times()]
        values += [abs(p(p.end)) for p in self._pieces if math.isfinite(p.end)]
        return values

    def scaled(self, factor: float) -> "TimeSchedule":
        return TimeSchedule([SchedulePiece(p.start, p.end, p.poly * factor) for p in self._pieces])

    def __str__(self):
        parts = [f"[{p.start:g},{p.end:g}):{np.round(p.poly.coef, 6).tolist()}" for p in self._pieces]
        return f"TimeSchedule({', '.join(parts)})"

    def __repr__(self):
        return self.__str__()


CONSTANT_ONE = TimeSchedule.constant(1.0)
