"""Piecewise-linear (chord) approximation of quadratic generator fuel cost."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

DEFAULT_SEGMENTS = 10
_RANGE_TOL = 1e-9


class QuadraticCost(Protocol):
    id: str
    a: float
    b: float
    c: float
    pmin: float
    pmax: float


@dataclass(frozen=True)
class Segment:
    start_mw: float
    end_mw: float
    width_mw: float
    slope_eur_per_mwh: float


@dataclass(frozen=True)
class PiecewiseCost:
    generator_id: str
    pmin_mw: float
    pmax_mw: float
    base_cost_eur_per_h: float
    segments: tuple[Segment, ...]

    @property
    def slopes(self) -> list[float]:
        return [s.slope_eur_per_mwh for s in self.segments]

    @property
    def breakpoints(self) -> list[float]:
        if not self.segments:
            return [self.pmin_mw]
        return [self.segments[0].start_mw] + [s.end_mw for s in self.segments]


def quadratic(g: QuadraticCost, p: float) -> float:
    return g.a * p * p + g.b * p + g.c


def _check_range(p: float, lo: float, hi: float) -> None:
    tol = _RANGE_TOL * max(1.0, abs(lo), abs(hi))
    if not lo - tol <= p <= hi + tol:
        raise ValueError(f"output {p} MW outside [{lo}, {hi}]")


def evaluate_quadratic(g: QuadraticCost, p: float) -> float:
    """Exact fuel cost a*P^2 + b*P + c in EUR/h for P inside the unit's range."""
    _check_range(p, g.pmin, g.pmax)
    return quadratic(g, p)


def linearize(g: QuadraticCost, segments: int = DEFAULT_SEGMENTS) -> PiecewiseCost:
    """Split [pmin, pmax] into equal-width segments priced at the chord slope.

    A unit with pmin == pmax has no segments; its cost is the base cost alone.
    """
    if int(segments) != segments or segments < 1:
        raise ValueError(f"segment count must be a positive integer, got {segments}")
    if g.a < 0:
        raise ValueError(f"generator {g.id}: non-convex cost (a < 0) cannot be linearized")
    lo, hi = float(g.pmin), float(g.pmax)
    if hi < lo:
        raise ValueError(f"generator {g.id}: pmax < pmin")
    base = quadratic(g, lo)
    if hi == lo:
        return PiecewiseCost(g.id, lo, hi, base, ())

    width = (hi - lo) / segments
    segs = []
    for k in range(segments):
        start = lo + k * width
        end = hi if k == segments - 1 else start + width
        # chord slope (Q(end) - Q(start)) / width, factored to avoid cancellation
        slope = g.a * (start + end) + g.b
        segs.append(Segment(start, end, end - start, slope))
    return PiecewiseCost(g.id, lo, hi, base, tuple(segs))


def fill_segments(pw: PiecewiseCost, p: float) -> list[float]:
    """Greedy left-to-right segment loading that realises output ``p``."""
    _check_range(p, pw.pmin_mw, pw.pmax_mw)
    remaining = max(0.0, p - pw.pmin_mw)
    fills = []
    for seg in pw.segments:
        take = min(seg.width_mw, remaining)
        fills.append(take)
        remaining -= take
    return fills


def evaluate_piecewise(pw: PiecewiseCost, p: float) -> float:
    fills = fill_segments(pw, p)
    return pw.base_cost_eur_per_h + sum(f * s.slope_eur_per_mwh for f, s in zip(fills, pw.segments))


def max_overestimate(g: QuadraticCost, segments: int) -> float:
    """Worst-case chord error a * width^2 / 4, reached at segment midpoints."""
    width = (g.pmax - g.pmin) / segments
    return g.a * width * width / 4.0
