"""Piecewise-linear envelopes of bounds and derived views.

Working coordinates: ``ratio`` is storage measured in repair-packet units
(alpha/beta) and values are file sizes in the same units (B/beta).  Every
computation is exact over rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .core import (
    ParameterRangeError,
    RationalLike,
    SystemParams,
    line_minimum_envelope,
)
from .generators import CutSet, LinearBound, PackingCertificate, cutset_bounds

FAMILY_NAMES = ("cutset", "uniform-rectangles", "mixed-rectangles", "full")


def _in_family(bound: LinearBound, family: str) -> bool:
    if family == "full":
        return True
    prov = bound.provenance
    if isinstance(prov, CutSet):
        return True
    if family == "cutset":
        return False
    if not isinstance(prov, PackingCertificate):
        return False
    if any(rect.m != 1 for rect in prov.rectangles):
        return False
    if family == "mixed-rectangles":
        return True
    return len({rect.ell for rect in prov.rectangles}) == 1


def family_members(bounds: Sequence[LinearBound], family: str):
    """Filter to one of the four nested families: classic bounds only, plus
    single-helper packings of one width, plus mixed widths, then everything."""
    if family not in FAMILY_NAMES:
        raise ParameterRangeError(f"unknown family {family!r}")
    return tuple(b for b in bounds if _in_family(b, family))


@dataclass(frozen=True)
class EnvelopeSegment:
    """One maximal interval on which a single bound is the minimum."""

    lo: Fraction
    hi: Optional[Fraction]
    bound: LinearBound

    def value_at(self, ratio) -> Fraction:
        return self.bound.value_at(ratio, 1)


@dataclass(frozen=True)
class PiecewiseLinearEnvelope:
    """The pointwise minimum of a bound set over ratio >= 0, as contiguous
    segments; the last segment extends to infinity."""

    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise ParameterRangeError("an envelope needs at least one segment")
        if self.segments[0].lo != 0:
            raise ParameterRangeError("envelope must start at ratio 0")
        if self.segments[-1].hi is not None:
            raise ParameterRangeError("envelope must extend to infinity")
        for left, right in zip(self.segments, self.segments[1:]):
            if left.hi != right.lo:
                raise ParameterRangeError("envelope segments must be contiguous")

    @property
    def breakpoints(self) -> tuple:
        return tuple(seg.lo for seg in self.segments[1:])

    def _segment_at(self, ratio: Fraction) -> EnvelopeSegment:
        if ratio < 0:
            raise ParameterRangeError("ratio must be >= 0")
        for seg in self.segments:
            if seg.hi is None or ratio < seg.hi:
                return seg
        return self.segments[-1]

    def value_at(self, ratio: RationalLike) -> Fraction:
        return self._segment_at(Fraction(ratio)).value_at(Fraction(ratio))

    def active_at(self, ratio: RationalLike) -> LinearBound:
        return self._segment_at(Fraction(ratio)).bound


def upper_envelope(bounds: Sequence[LinearBound]) -> PiecewiseLinearEnvelope:
    """Tightest piecewise-linear upper estimate of the file size per packet
    unit.  Coincident candidates tie-break on normalized coefficients, then
    identifier, so the result is independent of input order."""
    bounds = tuple(bounds)
    if not bounds:
        raise ParameterRangeError("need at least one bound")
    ordered = sorted(bounds, key=lambda b: (b.dedup_key, b.bound_id))
    lines = [
        (Fraction(b.a, b.c), Fraction(b.b, b.c), b) for b in ordered
    ]
    segments = tuple(
        EnvelopeSegment(lo, hi, payload)
        for lo, hi, payload in line_minimum_envelope(lines)
    )
    return PiecewiseLinearEnvelope(segments)


class BoundaryVertex(NamedTuple):
    x: Fraction
    y: Fraction


@dataclass(frozen=True)
class TradeoffBoundary:
    """The storage/repair tradeoff in per-file units: x is storage per file
    bit, y repair bandwidth per file bit.  Each facet is a bound whose
    feasible half-plane is a*x + b*y >= c; vertices are where consecutive
    facets meet, with x strictly increasing and y strictly decreasing."""

    vertices: tuple
    facets: tuple


def tradeoff_boundary(envelope: PiecewiseLinearEnvelope) -> TradeoffBoundary:
    vertices = []
    for ratio in envelope.breakpoints:
        value = envelope.value_at(ratio)
        if value <= 0:
            raise ParameterRangeError(
                "envelope must be positive at its breakpoints"
            )
        vertices.append(BoundaryVertex(ratio / value, 1 / value))
    facets = tuple(seg.bound for seg in envelope.segments)
    return TradeoffBoundary(tuple(vertices), facets)


def evaluate_best(
    bounds: Sequence[LinearBound], alpha: RationalLike, beta: RationalLike
):
    """Smallest bound value at a concrete (alpha, beta), with the witness
    achieving it (ties broken on normalized coefficients, then identifier)."""
    bounds = tuple(bounds)
    if not bounds:
        raise ParameterRangeError("need at least one bound")
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if alpha < 0 or beta < 0:
        raise ParameterRangeError("alpha and beta must be >= 0")
    best = min(
        bounds,
        key=lambda b: (b.value_at(alpha, beta), b.dedup_key, b.bound_id),
    )
    return best.value_at(alpha, beta), best


class GapRow(NamedTuple):
    ratio: Fraction
    functional: Fraction
    exact: Fraction
    gap: Fraction


@dataclass(frozen=True)
class GapReport:
    """Where the full bound set improves on the classic envelope.

    ``rows`` samples both envelopes on a grid over [0, d]; ``intervals``
    are the exact open ratio intervals with a positive gap; ``max_gap`` is
    attained at ``max_at`` (a breakpoint of the gap function).
    """

    params: SystemParams
    grid_step: Fraction
    rows: tuple
    intervals: tuple
    max_gap: Fraction
    max_at: Fraction


def _positive_intervals(functional, exact):
    """Open intervals where functional - exact > 0, exact arithmetic."""
    breaks = sorted(
        {Fraction(0)}
        | set(functional.breakpoints)
        | set(exact.breakpoints)
    )

    def gap_at(ratio):
        return functional.value_at(ratio) - exact.value_at(ratio)

    def gap_line(lo, hi_sample):
        # Linear on the piece: recover slope/offset from two samples.
        g0 = gap_at(lo)
        g1 = gap_at(hi_sample)
        slope = (g1 - g0) / (hi_sample - lo)
        return slope, g0 - slope * lo

    raw = []
    for index, lo in enumerate(breaks):
        hi = breaks[index + 1] if index + 1 < len(breaks) else None
        sample = (lo + hi) / 2 if hi is not None else lo + 1
        slope, offset = gap_line(lo, sample)
        if slope == 0:
            if offset > 0:
                raw.append((lo, hi))
            continue
        zero = -offset / slope
        if slope > 0:
            start = max(lo, zero)
            if hi is None or start < hi:
                raw.append((start, hi))
        else:
            if zero > lo and (hi is None or lo < hi):
                raw.append((lo, min(zero, hi) if hi is not None else zero))

    merged = []
    for interval in raw:
        if (
            merged
            and merged[-1][1] is not None
            and merged[-1][1] == interval[0]
            and gap_at(interval[0]) > 0
        ):
            merged[-1] = (merged[-1][0], interval[1])
        else:
            merged.append(list(interval))
    return tuple((lo, hi) for lo, hi in merged), breaks, gap_at


def gap_report(
    params: SystemParams,
    bounds: Sequence[LinearBound],
    grid_step: RationalLike,
) -> GapReport:
    """Compare the classic envelope against the envelope of the classic
    bounds joined with ``bounds``, on a grid of ratios and exactly."""
    step = Fraction(grid_step)
    if step <= 0:
        raise ParameterRangeError("grid_step must be positive")
    classic = cutset_bounds(params)
    functional = upper_envelope(classic)
    exact = upper_envelope(tuple(classic) + tuple(bounds))

    rows = []
    ratio = Fraction(0)
    top = Fraction(params.d)
    while ratio <= top:
        f_val = functional.value_at(ratio)
        e_val = exact.value_at(ratio)
        rows.append(GapRow(ratio, f_val, e_val, f_val - e_val))
        ratio += step
    if rows[-1].ratio != top:
        f_val = functional.value_at(top)
        e_val = exact.value_at(top)
        rows.append(GapRow(top, f_val, e_val, f_val - e_val))

    intervals, breaks, gap_at = _positive_intervals(functional, exact)
    max_gap = Fraction(0)
    max_at = Fraction(0)
    for ratio in breaks:
        value = gap_at(ratio)
        if value > max_gap:
            max_gap = value
            max_at = ratio
    return GapReport(params, step, tuple(rows), intervals, max_gap, max_at)
