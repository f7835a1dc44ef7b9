"""Certificate constructors, their verification, and the bound enumerator."""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest

import regenbounds as rb
from regenbounds import (
    ChainCertificate,
    ChainStep,
    Combination,
    CutSet,
    EnumerationLimits,
    FeasibilityError,
    LinearBound,
    LinearForm,
    MinimalConfiguration,
    PackingCertificate,
    ParameterRangeError,
    Rectangle,
    RefinementError,
    SystemParams,
    bq,
    combine_rs_p0,
    node_set,
    helper_product,
    p0_term,
    thm_lm_bound,
    thm_rs_bound,
    thm_rs_bound_unit,
    verify_certificate,
)
from regenbounds.formats import bound_from_obj, bound_to_obj

P23 = SystemParams(2, 3)
P33 = SystemParams(3, 3)
P44 = SystemParams(4, 4)
P67 = SystemParams(6, 7)

# Hand-checked certificates, frozen as their serialized form.  Each was
# verified step by step on paper: every step recovers the file, every
# forwarded packet set is derivable where required, and the accounting
# matches the published triple.
GOLDEN_CHAIN_33 = {
    "a": 5,
    "b": 9,
    "c": 4,
    "id": "rs.q1.l1.m1.v1-1",
    "markers": [],
    "provenance": {
        "anchored": False,
        "claims": {"a": 5, "b": 9, "c": 4},
        "d": 3,
        "ell": 1,
        "k": 3,
        "m": 1,
        "q": 1,
        "q_list": [1, 1],
        "steps": [
            {"big": ["s2>1", "s4>1", "w3"], "small": ["s4>2"]},
            {"big": ["s2>1", "s3>1", "w4"], "small": ["s3>2"]},
            {"big": ["s4>3", "w2"], "small": ["w1"]},
            {"big": ["s2>4", "s4>1", "w3"], "small": ["s2>1"]},
        ],
        "type": "chain",
    },
}

GOLDEN_UNIT_33 = {
    "a": 4,
    "b": 6,
    "c": 3,
    "id": "rsu.v1-1",
    "markers": [],
    "provenance": {
        "anchored": True,
        "claims": {"a": 4, "b": 6, "c": 3},
        "d": 3,
        "ell": 1,
        "k": 3,
        "m": 1,
        "q": None,
        "q_list": [1, 1],
        "steps": [
            {"big": ["s2>1", "s4>1", "w3"], "small": ["s4>2"]},
            {"big": ["s2>1", "s3>1", "w4"], "small": ["s3>2"]},
            {"big": ["s4>3", "w2"], "small": ["w1"]},
            {"big": [], "small": ["s2>1"]},
        ],
        "type": "chain",
    },
}

GOLDEN_CHAIN_44 = {
    "a": 6,
    "b": 17,
    "c": 4,
    "id": "rs.q1.l2.m1.v1-1",
    "markers": [],
    "provenance": {
        "anchored": False,
        "claims": {"a": 6, "b": 17, "c": 4},
        "d": 4,
        "ell": 2,
        "k": 4,
        "m": 1,
        "q": 1,
        "q_list": [1, 1],
        "steps": [
            {
                "big": ["s2>1", "s3>1", "s3>2", "s5>1", "s5>2", "w4"],
                "small": ["s5>3"],
            },
            {
                "big": ["s2>1", "s3>1", "s3>2", "s4>1", "s4>2", "w5"],
                "small": ["s4>3"],
            },
            {"big": ["s5>4", "w3"], "small": ["w1", "w2"]},
            {
                "big": ["s2>1", "s3>5", "s5>1", "s5>2", "w4"],
                "small": ["s3>1", "s3>2"],
            },
        ],
        "type": "chain",
    },
}


# --- configurations ---------------------------------------------------------


def test_configuration_weight_matches_cut_value():
    config = MinimalConfiguration(
        P44, frozenset({1, 2}), frozenset({3, 4}), frozenset({5})
    )
    assert config.q == 2
    assert config.weight() == bq(P44, 2)
    expected = (
        node_set([1, 2])
        | helper_product([4], [3])
        | helper_product([5], [3, 4])
    )
    assert config.expand() == expected


def test_configuration_rejects_bad_partitions():
    with pytest.raises(ParameterRangeError):
        MinimalConfiguration(P44, frozenset({1}), frozenset({1, 2, 3}), frozenset())
    with pytest.raises(ParameterRangeError):
        MinimalConfiguration(
            P44, frozenset({1}), frozenset({2}), frozenset({3, 4, 5})
        )


def test_every_cutset_bound_matches_the_table_and_verifies():
    for params in (P23, P33, P44, P67):
        bounds = rb.cutset_bounds(params)
        assert [b.dedup_key for b in bounds] == [
            LinearBound(1, bq(params, q)).normalize().dedup_key
            for q in range(params.k + 1)
        ]
        for bound in bounds:
            assert isinstance(bound.provenance, CutSet)
            assert verify_certificate(bound).ok


# --- chain certificates -----------------------------------------------------


def test_small_system_chain_matches_golden_serialization():
    bound = thm_rs_bound(P33, 1, 1, 1, [1, 1])
    assert bound_to_obj(bound) == GOLDEN_CHAIN_33
    assert verify_certificate(bound).ok


def test_small_system_anchored_chain_matches_golden_serialization():
    bound = thm_rs_bound_unit(P33, [1, 1])
    assert bound_to_obj(bound) == GOLDEN_UNIT_33
    assert verify_certificate(bound).ok


def test_wide_band_chain_matches_golden_serialization():
    bound = thm_rs_bound(P44, 1, 2, 1, [1, 1])
    assert bound_to_obj(bound) == GOLDEN_CHAIN_44
    assert verify_certificate(bound).ok


def _feasible_chain_inputs(params):
    k, d = params.k, params.d
    for ell in range(1, k + 1):
        for m in range(1, k - ell + 1):
            u = d + 1 - ell - m
            qmax = min(k - ell - m, u)
            if qmax < 1:
                continue
            for q in range(1, k - ell - m + 1):
                for widths in [(w,) for w in range(1, qmax + 1)] + [
                    (w1, w2)
                    for w1 in range(1, qmax + 1)
                    for w2 in range(1, qmax + 1)
                ]:
                    if sum(u - w for w in widths) < u:
                        continue
                    yield q, ell, m, widths


def test_chain_claims_match_independent_closed_form():
    # Recompute every chain's published triple from the frozen cut-value
    # table: (len(widths)+2) * B <= B_{ell+m} - ell*m*beta + B_q + sum B_w.
    checked = 0
    for params in (P33, P44, SystemParams(4, 6), SystemParams(5, 7), P67):
        for q, ell, m, widths in _feasible_chain_inputs(params):
            if m > params.d + 1 - params.k:
                continue
            bound = thm_rs_bound(params, q, ell, m, widths)
            expected = bq(params, ell + m) + LinearForm(0, -ell * m) + bq(params, q)
            for width in widths:
                expected = expected + bq(params, width)
            assert bound.b_multiplier == len(widths) + 2
            assert bound.form == expected
            assert verify_certificate(bound).ok
            checked += 1
    assert checked >= 60


def test_anchored_chain_claims_match_independent_closed_form():
    # (len(widths)+1) * B <= B_2 - beta + sum B_w.
    checked = 0
    for params in (P33, P44, SystemParams(4, 6), P67):
        u = params.d - 1
        qmax = min(params.k - 2, u)
        for widths in [(w,) for w in range(1, qmax + 1)] + [
            (w1, w2)
            for w1 in range(1, qmax + 1)
            for w2 in range(1, qmax + 1)
        ]:
            if qmax < 1 or sum(u - w for w in widths) < u:
                continue
            bound = thm_rs_bound_unit(params, widths)
            expected = bq(params, 2) + LinearForm(0, -1)
            for width in widths:
                expected = expected + bq(params, width)
            assert bound.b_multiplier == len(widths) + 1
            assert bound.form == expected
            assert verify_certificate(bound).ok
            checked += 1
    assert checked >= 20


CHAIN_REJECTIONS = [
    ("positive-parameters", lambda: thm_rs_bound(P33, 0, 1, 1, [1])),
    ("positive-parameters", lambda: thm_rs_bound(P33, 1, 0, 1, [1])),
    ("parameter-budget", lambda: thm_rs_bound(P44, 2, 2, 1, [1])),
    ("final-block-width", lambda: thm_rs_bound(P44, 1, 1, 2, [1, 1])),
    ("chain-length", lambda: thm_rs_bound(P44, 1, 1, 1, [])),
    ("block-width", lambda: thm_rs_bound(P44, 1, 1, 1, [0, 1])),
    ("block-width", lambda: thm_rs_bound_unit(P33, [2, 1])),
    ("block-intersection", lambda: thm_rs_bound(P67, 1, 1, 1, [4])),
    ("block-intersection", lambda: thm_rs_bound_unit(P67, [4])),
]


@pytest.mark.parametrize(
    "constraint,build", CHAIN_REJECTIONS, ids=[c for c, _ in CHAIN_REJECTIONS]
)
def test_chain_constructor_rejections_carry_constraint_names(constraint, build):
    with pytest.raises(FeasibilityError) as excinfo:
        build()
    assert excinfo.value.constraint == constraint


def test_oversized_final_block_needs_opt_in_and_is_marked():
    bound = thm_rs_bound(P44, 1, 1, 2, [1, 1], allow_oversized_final_block=True)
    assert bound.markers == ("unverified-premise",)
    assert (bound.c, bound.a, bound.b) == (4, 6, 17)
    assert verify_certificate(bound).ok


# --- rectangles and packing bounds ------------------------------------------


def test_rectangle_defaults_and_label():
    rect = Rectangle(frozenset({5}), frozenset({1, 2}), 2)
    assert (rect.t, rect.s) == (3, 2)
    assert (rect.ell, rect.m) == (2, 1)
    assert rect.label() == "L1-2M5-5r2t3s2"
    assert rect.product() == helper_product([5], [1, 2])


def test_rectangle_validation():
    with pytest.raises(ParameterRangeError):
        Rectangle(frozenset({2}), frozenset({3}), 1)  # helper below target
    with pytest.raises(ParameterRangeError):
        Rectangle(frozenset({4}), frozenset({1, 2, 3}), 2)  # r below ell
    with pytest.raises(ParameterRangeError):
        Rectangle(frozenset({4}), frozenset({1}), 1, 1)  # t below r+m
    with pytest.raises(ParameterRangeError):
        Rectangle(frozenset({4}), frozenset({1}), 2, 3, 1)  # s below r


def test_replacement_term_matches_direct_formula():
    # p0 = B_t + (ell-1) B_s - ell*alpha + ell*(d-r+1)*beta, on two systems.
    for params in (P44, P67):
        d, k = params.d, params.k
        for ell in range(1, 3):
            for m in range(1, 3):
                targets = frozenset(range(1, ell + 1))
                helpers = frozenset(range(ell + 1, ell + 1 + m))
                for r in range(ell, k - m + 1):
                    for t in range(r + m, k + 1):
                        for s in range(r, k + 1):
                            rect = Rectangle(helpers, targets, r, t, s)
                            expected = (
                                bq(params, t)
                                + bq(params, s).scaled(ell - 1)
                                + LinearForm(-ell, ell * (d - r + 1))
                            )
                            assert p0_term(params, rect) == expected


P0_REJECTIONS = [
    ("rectangle-rank", P44, Rectangle(frozenset({5}), frozenset({1, 2, 3}), 4)),
    ("index-t-range", P44, Rectangle(frozenset({5}), frozenset({1, 2}), 2, 5)),
    ("index-s-range", P67, Rectangle(frozenset({8}), frozenset({1, 2}), 2, 4, 7)),
    ("helper-region", P33, Rectangle(frozenset({5}), frozenset({1, 2}), 2)),
]


@pytest.mark.parametrize(
    "constraint,params,rect", P0_REJECTIONS, ids=[c for c, _, _ in P0_REJECTIONS]
)
def test_replacement_term_rejections(constraint, params, rect):
    with pytest.raises(FeasibilityError) as excinfo:
        p0_term(params, rect)
    assert excinfo.value.constraint == constraint


def test_packing_modes_agree_for_single_helper_rectangles():
    # With one helper the direct and derived formulas coincide whenever the
    # derived indices sit at t = r+1, s = r.
    for d in range(2, 11):
        for k in range(2, d + 1):
            params = SystemParams(k, d)
            for q in range(0, k - 1):
                ell = k - q - 1
                if ell < 1:
                    continue
                targets = frozenset(range(q + 1, q + ell + 1))
                helpers = frozenset({q + ell + 1})
                for r in range(ell, k):
                    rect = Rectangle(helpers, targets, r, r + 1, r)
                    stated = thm_lm_bound(params, q, [rect], mode=rb.AS_STATED)
                    derived = thm_lm_bound(params, q, [rect], mode=rb.DERIVED)
                    assert stated.form == derived.form
                    assert stated.b_multiplier == derived.b_multiplier
                    assert stated.markers == ()
                    assert derived.markers == ()


def test_packing_modes_agree_for_single_target_rectangles():
    # With one target the other agreement: derived at t = r+m, s = r.
    for params in (P44, P67):
        k = params.k
        for q in range(0, k - 1):
            for m in range(1, min(3, params.d + 1 - q - 1) + 1):
                targets = frozenset({q + 1})
                helpers = frozenset(range(q + 2, q + 2 + m))
                if max(helpers) > params.d + 1 or 1 + m > k - q:
                    continue
                for r in range(1, k - m + 1):
                    rect = Rectangle(helpers, targets, r)
                    stated = thm_lm_bound(params, q, [rect], mode=rb.AS_STATED)
                    derived = thm_lm_bound(params, q, [rect], mode=rb.DERIVED)
                    assert stated.form == derived.form


def test_packing_default_mode_follows_helper_count():
    one_helper = Rectangle(frozenset({5}), frozenset({3, 4}), 2)
    bound = thm_lm_bound(P44, 2, [one_helper])
    assert isinstance(bound.provenance, PackingCertificate)
    assert bound.provenance.term_modes == (rb.AS_STATED,)
    assert bound.markers == ()

    two_helpers = Rectangle(frozenset({6, 7}), frozenset({3, 4}), 2)
    bound = thm_lm_bound(P67, 2, [two_helpers])
    assert bound.provenance.term_modes == (rb.DERIVED,)
    assert bound.markers == ()


def test_packing_forced_direct_mode_on_wide_rectangles_is_marked():
    two_helpers = Rectangle(frozenset({6, 7}), frozenset({3, 4}), 2)
    bound = thm_lm_bound(P67, 2, [two_helpers], mode=rb.AS_STATED)
    assert bound.markers == ("as-published",)
    assert verify_certificate(bound).ok


PACKING_REJECTIONS = [
    (
        "q-range",
        lambda: thm_lm_bound(P44, 5, [Rectangle(frozenset({5}), frozenset({4}), 1)]),
    ),
    (
        "target-region",
        lambda: thm_lm_bound(P44, 2, [Rectangle(frozenset({5}), frozenset({1, 2}), 2)]),
    ),
    (
        "rectangle-overlap",
        lambda: thm_lm_bound(
            P67,
            0,
            [
                Rectangle(frozenset({7}), frozenset({1, 2}), 2),
                Rectangle(frozenset({7}), frozenset({2, 3}), 2),
            ],
        ),
    ),
]


@pytest.mark.parametrize(
    "constraint,build", PACKING_REJECTIONS, ids=[c for c, _ in PACKING_REJECTIONS]
)
def test_packing_rejections_carry_constraint_names(constraint, build):
    with pytest.raises(FeasibilityError) as excinfo:
        build()
    assert excinfo.value.constraint == constraint


def test_disjoint_product_rectangles_may_share_targets():
    bound = thm_lm_bound(
        P67,
        0,
        [
            Rectangle(frozenset({7}), frozenset({1, 2}), 2),
            Rectangle(frozenset({8}), frozenset({2, 3}), 2),
        ],
    )
    assert bound.b_multiplier == 5
    assert verify_certificate(bound).ok


# --- combinations -----------------------------------------------------------


def _five_site_refinements():
    base = thm_rs_bound(P44, 1, 2, 1, [1, 1]).provenance
    sites = [(1, 3), (1, 5), (2, 3), (2, 4), (4, 5)]
    refinements = [
        (step, Rectangle(frozenset({helper}), frozenset({1, 2}), 2, 3, 2))
        for step, helper in sites
    ]
    return base, refinements


def test_refining_every_site_of_the_wide_band_chain():
    base, refinements = _five_site_refinements()
    bound = combine_rs_p0(P44, base, refinements)
    assert (bound.c, bound.a, bound.b) == (14, 21, 57)
    assert isinstance(bound.provenance, Combination)
    assert verify_certificate(bound).ok
    # Independent accounting: base 4B <= 6a+17b, plus five replacement
    # terms p0 - ell*m*beta each worth 3a+8b with ell = 2 copies added.
    term = p0_term(P44, refinements[0][1]) + LinearForm(0, -2)
    assert term == LinearForm(3, 8)
    assert bound.form == LinearForm(6, 17) + term.scaled(5)


def test_combination_with_no_refinements_keeps_base_values():
    base = thm_rs_bound(P44, 1, 2, 1, [1, 1]).provenance
    bound = combine_rs_p0(P44, base, [])
    assert (bound.c, bound.a, bound.b) == (4, 6, 17)
    assert isinstance(bound.provenance, Combination)
    assert verify_certificate(bound).ok


def test_combination_rejections():
    base, refinements = _five_site_refinements()
    rect = refinements[0][1]
    with pytest.raises(RefinementError):
        combine_rs_p0(P44, base, [(0, rect)])
    with pytest.raises(RefinementError):
        combine_rs_p0(P44, base, [(9, rect)])
    with pytest.raises(RefinementError):
        combine_rs_p0(P44, base, [(1, rect), (1, rect)])
    with pytest.raises(RefinementError):
        # Step 3's big set does not contain this helper block.
        combine_rs_p0(P44, base, [(3, rect)])
    overlapping = Rectangle(frozenset({3}), frozenset({2}), 1)
    with pytest.raises(RefinementError):
        combine_rs_p0(P44, base, [(1, rect), (1, overlapping)])


# --- tampering is caught ----------------------------------------------------


def _rebound(bound: LinearBound, provenance) -> LinearBound:
    return LinearBound(bound.b_multiplier, bound.form, provenance, bound.markers)


def test_tampered_chain_step_is_rejected():
    bound = thm_rs_bound(P44, 1, 2, 1, [1, 1])
    cert = bound.provenance
    victim = next(iter(cert.steps[0].big))
    steps = (ChainStep(cert.steps[0].big - {victim}, cert.steps[0].small),) + cert.steps[1:]
    report = verify_certificate(_rebound(bound, dataclasses.replace(cert, steps=steps)))
    assert not report.ok


def test_tampered_claims_coefficient_is_rejected():
    bound = thm_rs_bound(P33, 1, 1, 1, [1, 1])
    cert = bound.provenance
    forged = LinearBound(cert.claims.b_multiplier, cert.claims.form + LinearForm(1, 0))
    report = verify_certificate(_rebound(bound, dataclasses.replace(cert, claims=forged)))
    assert not report.ok


def test_tampered_forwarded_packet_is_rejected():
    bound = thm_rs_bound(P44, 1, 2, 1, [1, 1])
    cert = bound.provenance
    steps = (ChainStep(cert.steps[0].big, frozenset()),) + cert.steps[1:]
    report = verify_certificate(_rebound(bound, dataclasses.replace(cert, steps=steps)))
    assert not report.ok


def test_tampered_packing_rectangle_is_rejected(enum):
    bound = next(
        b for b in enum(4, 4).bounds if isinstance(b.provenance, PackingCertificate)
    )
    cert = bound.provenance
    first = cert.rectangles[0]
    grown = dataclasses.replace(first, r=first.r + 1, t=None, s=None)
    report = verify_certificate(
        _rebound(bound, dataclasses.replace(cert, rectangles=(grown,) + cert.rectangles[1:]))
    )
    assert not report.ok


def test_removed_anchor_step_is_rejected():
    bound = thm_rs_bound_unit(P33, [1, 1])
    cert = bound.provenance
    report = verify_certificate(
        _rebound(bound, dataclasses.replace(cert, steps=cert.steps[:-1]))
    )
    assert not report.ok


# --- the enumerator ---------------------------------------------------------

EXPECTED_COUNTS = {
    # (k, d): (bound count, truncated, per-family counts)
    (2, 3): (3, False, {"cutset": 3, "uniform-rectangles": 3, "mixed-rectangles": 3, "full": 3}),
    (3, 3): (10, False, {"cutset": 4, "uniform-rectangles": 6, "mixed-rectangles": 6, "full": 10}),
    (4, 4): (96, True, {"cutset": 5, "uniform-rectangles": 17, "mixed-rectangles": 26, "full": 96}),
    (6, 7): (3086, True, {"cutset": 7, "uniform-rectangles": 49, "mixed-rectangles": 295, "full": 3086}),
}


@pytest.mark.parametrize("kd", sorted(EXPECTED_COUNTS))
def test_enumeration_counts_are_stable(enum, kd):
    count, truncated, families = EXPECTED_COUNTS[kd]
    result = enum(*kd)
    assert len(result.bounds) == count
    assert result.truncated == truncated
    got = {f: len(rb.family_members(result.bounds, f)) for f in rb.FAMILY_NAMES}
    assert got == families


def test_enumeration_is_deduplicated_and_sorted(enum):
    for kd in [(3, 3), (4, 4)]:
        bounds = enum(*kd).bounds
        keys = [b.dedup_key for b in bounds]
        assert len(keys) == len(set(keys))
        assert keys == sorted(keys)
        ids = [b.bound_id for b in bounds]
        assert len(ids) == len(set(ids))


def test_every_emitted_bound_verifies(enum):
    for kd in [(2, 3), (3, 3), (4, 4), (6, 7)]:
        bounds = enum(*kd).bounds
        assert all(verify_certificate(b).ok for b in bounds)


def test_emitted_bounds_are_shaped_sanely(enum):
    for kd in [(3, 3), (6, 7)]:
        k = kd[0]
        for bound in enum(*kd).bounds:
            assert bound.c >= 1
            assert bound.a >= 0
            assert bound.b >= 0
            assert Fraction(bound.a, bound.c) <= k
            assert bound.markers == ()


def test_enumeration_respects_reduced_caps(enum):
    # Tighter caps shrink the search but never emit unverifiable bounds,
    # and the cap-independent cut values stay present.
    limits = EnumerationLimits(4, 2, 4, 200)
    small = enum(6, 7, limits)
    full = enum(6, 7)
    assert len(small.bounds) <= len(full.bounds)
    assert all(verify_certificate(b).ok for b in small.bounds)
    cut_keys = {
        LinearBound(1, bq(P67, q)).normalize().dedup_key for q in range(7)
    }
    assert cut_keys <= {b.dedup_key for b in small.bounds}
    assert cut_keys <= {b.dedup_key for b in full.bounds}


def test_round_trip_serialization_preserves_every_provenance_type(enum):
    seen = set()
    picks = []
    base, refinements = _five_site_refinements()
    picks.append(combine_rs_p0(P44, base, refinements))
    for bound in enum(4, 4).bounds:
        kind = type(bound.provenance).__name__
        if kind not in seen:
            seen.add(kind)
            picks.append(bound)
    kinds = {type(b.provenance).__name__ for b in picks}
    assert {"CutSet", "ChainCertificate", "PackingCertificate", "Combination"} <= kinds
    for bound in picks:
        obj = bound_to_obj(bound)
        back = bound_from_obj(obj)
        assert bound_to_obj(back) == obj
        assert verify_certificate(back).ok
