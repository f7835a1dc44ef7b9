"""Piecewise-linear envelopes, trade-off boundaries, and gap reports."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

import regenbounds as rb
from regenbounds import (
    BoundaryVertex,
    LinearBound,
    LinearForm,
    ParameterRangeError,
    SystemParams,
    bq,
    evaluate_best,
    family_members,
    functional_envelope_value,
    gap_report,
    tradeoff_boundary,
    upper_envelope,
)

P33 = SystemParams(3, 3)
P67 = SystemParams(6, 7)


def _value(bound: LinearBound, ratio) -> Fraction:
    return Fraction(bound.a * Fraction(ratio) + bound.b, bound.c)


def test_envelope_matches_dense_sampling_on_random_bound_sets():
    rng = random.Random(20260822)
    for _ in range(200):
        bounds = [
            LinearBound(rng.randint(1, 12), LinearForm(rng.randint(0, 20), rng.randint(0, 200)))
            for _ in range(rng.randint(1, 9))
        ]
        envelope = upper_envelope(bounds)
        for _ in range(30):
            ratio = Fraction(rng.randint(0, 400), rng.randint(1, 40))
            expected = min(_value(b, ratio) for b in bounds)
            assert envelope.value_at(ratio) == expected


def test_envelope_structure_is_contiguous_from_zero_to_infinity():
    for family in rb.FAMILY_NAMES:
        bounds = family_members(rb.enumerate_bounds(P33).bounds, family)
        envelope = upper_envelope(bounds)
        segments = envelope.segments
        assert segments[0].lo == 0
        assert segments[-1].hi is None
        for left, right in zip(segments, segments[1:]):
            assert left.hi == right.lo
        # Each segment's bound is genuinely minimal at the segment midpoint.
        for segment in segments:
            mid = segment.lo + 1 if segment.hi is None else (segment.lo + segment.hi) / 2
            best = min(_value(b, mid) for b in bounds)
            assert _value(segment.bound, mid) == best


def test_small_system_cut_envelope_is_frozen():
    envelope = upper_envelope(
        family_members(rb.enumerate_bounds(P33).bounds, "cutset")
    )
    assert envelope.breakpoints == (1, 2, 3)
    assert [
        (s.lo, s.hi, s.bound.bound_id) for s in envelope.segments
    ] == [
        (0, 1, "cut.q3"),
        (1, 2, "cut.q2"),
        (2, 3, "cut.q1"),
        (3, None, "cut.q0"),
    ]
    assert envelope.value_at(Fraction(3, 2)) == Fraction(4)
    assert envelope.active_at(Fraction(3, 2)).bound_id == "cut.q2"


def test_envelope_agrees_with_functional_value_on_cut_bounds():
    for params in (P33, SystemParams(4, 4), P67):
        envelope = upper_envelope(rb.cutset_bounds(params))
        for numerator in range(0, 4 * params.d + 1):
            ratio = Fraction(numerator, 4)
            value, _ = functional_envelope_value(params, ratio, 1)
            assert envelope.value_at(ratio) == value


def test_two_line_boundary_vertex():
    bounds = [
        LinearBound(1, LinearForm(2, 0)),
        LinearBound(1, LinearForm(0, 5)),
    ]
    boundary = tradeoff_boundary(upper_envelope(bounds))
    assert boundary.vertices == (BoundaryVertex(Fraction(1, 2), Fraction(1, 5)),)
    assert len(boundary.facets) == 2


def test_small_system_boundary_vertices_are_frozen():
    bounds = rb.enumerate_bounds(P33).bounds
    boundary = tradeoff_boundary(upper_envelope(family_members(bounds, "full")))
    assert boundary.vertices == (
        BoundaryVertex(Fraction(1, 3), Fraction(1, 3)),
        BoundaryVertex(Fraction(3, 8), Fraction(1, 4)),
        BoundaryVertex(Fraction(1, 2), Fraction(1, 6)),
    )
    # The final vertex satisfies both adjacent storage/bandwidth constraints
    # with equality: 4x + 6y = 3 and x + 3y = 1.
    vertex = boundary.vertices[-1]
    assert 4 * vertex.x + 6 * vertex.y == 3
    assert vertex.x + 3 * vertex.y == 1


def test_boundary_vertices_are_feasible_for_every_bound():
    for params in (P33, SystemParams(4, 4)):
        bounds = rb.enumerate_bounds(params).bounds
        for family in rb.FAMILY_NAMES:
            members = family_members(bounds, family)
            boundary = tradeoff_boundary(upper_envelope(members))
            for vertex in boundary.vertices:
                for bound in members:
                    assert bound.a * vertex.x + bound.b * vertex.y >= bound.c
    # Each facet corresponds to a bound that is tight somewhere on it.


def test_boundary_is_monotone():
    for params in (P33, SystemParams(4, 4), P67):
        boundary = tradeoff_boundary(
            upper_envelope(rb.enumerate_bounds(params).bounds)
        )
        xs = [v.x for v in boundary.vertices]
        ys = [v.y for v in boundary.vertices]
        assert xs == sorted(xs) and len(set(xs)) == len(xs)
        assert ys == sorted(ys, reverse=True) and len(set(ys)) == len(ys)


def test_boundary_handles_degenerate_inputs():
    # Coefficients are validated at construction, so envelope values can
    # only vanish for the all-zero bound, which yields no vertices at all.
    with pytest.raises(ParameterRangeError):
        LinearBound(1, LinearForm(-1, 0))
    with pytest.raises(ParameterRangeError):
        LinearBound(0, LinearForm(1, 1))
    zero = LinearBound(1, rb.ZERO_FORM)
    boundary = tradeoff_boundary(upper_envelope([zero]))
    assert boundary.vertices == ()
    assert [f.dedup_key for f in boundary.facets] == [zero.dedup_key]


def test_family_filters():
    bounds = rb.enumerate_bounds(P33).bounds
    sizes = [len(family_members(bounds, f)) for f in rb.FAMILY_NAMES]
    assert sizes == [4, 6, 6, 10]
    assert family_members(bounds, "full") == list(bounds) or tuple(bounds)
    with pytest.raises(ParameterRangeError):
        family_members(bounds, "everything")


def test_evaluate_best_frozen_values(enum):
    bounds = enum(3, 3).bounds
    value, best = evaluate_best(bounds, 3, 2)
    assert value == 8
    assert best.dedup_key == (1, 2, 1)  # ties break toward the smaller key
    value, best = evaluate_best(bounds, 2, 1)
    assert value == Fraction(14, 3)
    assert best.dedup_key == (3, 4, 6)
    cut_only = family_members(bounds, "cutset")
    value, best = evaluate_best(cut_only, 2, 1)
    assert value == 5
    assert best.dedup_key == (1, 1, 3)


def test_evaluate_best_matches_brute_force(enum):
    bounds = enum(4, 4).bounds
    rng = random.Random(5)
    for _ in range(40):
        alpha = Fraction(rng.randint(0, 60), rng.randint(1, 12))
        beta = Fraction(rng.randint(1, 60), rng.randint(1, 12))
        value, best = evaluate_best(bounds, alpha, beta)
        per_bound = [Fraction(b.a * alpha + b.b * beta, b.c) for b in bounds]
        assert value == min(per_bound)
        assert Fraction(best.a * alpha + best.b * beta, best.c) == value


def test_gap_report_for_the_long_system_packing_bound(enum):
    target = next(b for b in enum(6, 7).bounds if b.dedup_key == (4, 10, 43))
    report = gap_report(P67, [target], Fraction(1, 2))
    assert report.intervals == ((Fraction(23, 6), Fraction(37, 6)),)
    assert report.max_gap == Fraction(3, 4)
    assert report.max_at == 5
    assert report.rows[0].ratio == 0
    assert report.rows[-1].ratio == 7
    assert len(report.rows) == 15
    for row in report.rows:
        functional, _ = functional_envelope_value(P67, row.ratio, 1)
        assert row.functional == functional
        assert row.exact == min(functional, _value(target, row.ratio))
        assert row.gap == row.functional - row.exact
        assert row.gap >= 0


def test_gap_report_with_no_extra_bounds_is_flat():
    report = gap_report(P33, [], Fraction(1, 2))
    assert report.intervals == ()
    assert report.max_gap == 0
    assert all(row.gap == 0 for row in report.rows)
