"""Linear storage/repair bounds with machine-checkable certificates.

Every bound produced here carries a certificate that re-derives it from
first principles: either a single minimal configuration, a chain of
configurations whose step sets satisfy explicit closure conditions, a
packing of helper rectangles, or a chain refined by rectangles.  The
checker (`verify_certificate`) re-validates everything with the
dependency-closure engine and exact weight accounting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .core import (
    BETA,
    CheckResult,
    FeasibilityError,
    InternalConsistencyError,
    LinearForm,
    MESSAGE,
    ParameterRangeError,
    RefinementError,
    RegenBoundsError,
    SystemParams,
    Variable,
    VarSet,
    VerificationReport,
    ZERO_FORM,
    _close_mask,
    _indexing,
    _to_mask,
    bq,
    helper_product,
    line_minimum_envelope,
    make_report,
    node_set,
    var_weight,
)

AS_STATED = "as-stated"
DERIVED = "derived"


def _node_range(lo: int, hi: int) -> frozenset:
    return frozenset(range(lo, hi + 1))


def _downward_pairs(nodes: Iterable[int]) -> VarSet:
    """Helper packets exchanged inside a node set, higher index sending."""
    nodes = sorted(nodes)
    out = set()
    for i, dst in enumerate(nodes):
        for src in nodes[i + 1:]:
            out.add(Variable.helper(src, dst))
    return frozenset(out)


def _fmt_vars(variables: Iterable[Variable]) -> str:
    return "{" + ", ".join(str(v) for v in sorted(variables)) + "}"


@lru_cache(maxsize=None)
def _closure_mask(params: SystemParams, mask: int) -> int:
    return _close_mask(params, mask)


# --- certificate types ------------------------------------------------------


@dataclass(frozen=True)
class MinimalConfiguration:
    """Partition of the d+1 nodes into intact, rebuilt, and bystander sets.

    ``vprime`` nodes are observed whole, ``repaired`` nodes are rebuilt in
    ascending order, ``unused`` nodes only donate repair packets.  The
    expanded variable set weighs exactly bq(len(vprime)) and determines
    the file.
    """

    params: SystemParams
    vprime: frozenset
    repaired: frozenset
    unused: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vprime", frozenset(self.vprime))
        object.__setattr__(self, "repaired", frozenset(self.repaired))
        object.__setattr__(self, "unused", frozenset(self.unused))
        nodes = range(1, self.params.node_count + 1)
        if (
            self.vprime | self.repaired | self.unused != frozenset(nodes)
            or len(self.vprime) + len(self.repaired) + len(self.unused)
            != self.params.node_count
        ):
            raise ParameterRangeError(
                "the three node sets must partition the whole system"
            )
        if len(self.vprime) + len(self.repaired) != self.params.k:
            raise ParameterRangeError(
                f"intact plus rebuilt nodes must number k={self.params.k}"
            )

    @property
    def q(self) -> int:
        return len(self.vprime)

    def expand(self) -> VarSet:
        """The variable set this configuration observes."""
        out = set(node_set(self.vprime))
        out |= _downward_pairs(self.repaired)
        out |= helper_product(self.unused, self.repaired)
        return frozenset(out)

    def weight(self) -> LinearForm:
        return var_weight(self.expand())


@dataclass(frozen=True)
class CutSet:
    """Provenance of a single-configuration bound."""

    params: SystemParams
    q: int
    configuration: MinimalConfiguration


class ChainStep(NamedTuple):
    big: VarSet
    small: VarSet


@dataclass(frozen=True)
class ChainCertificate:
    """A chained sequence of (big, small) variable sets.

    Accounting: with n steps the claim is n copies of the file against the
    weights of all big sets plus all small sets except the last.  When
    ``anchored`` the final step is a bare single packet whose weight is
    bounded directly; it contributes one fewer file copy and its packet
    weight is subtracted.

    ``q``, ``ell``, ``m``, ``q_list`` record the generating parameters for
    labeling only; verification uses the steps alone.
    """

    params: SystemParams
    steps: tuple
    anchored: bool
    claims: "LinearBound"
    ell: int
    m: int
    q_list: tuple
    q: Optional[int] = None

    def __post_init__(self):
        if not self.steps:
            raise ParameterRangeError("a chain certificate needs at least one step")


@dataclass(frozen=True)
class Rectangle:
    """The helper packets sent from every node of ``helpers`` to every node
    of ``targets``, with the rebuild-set size ``r`` and auxiliary cut
    indices ``t`` and ``s`` used by the replacement estimate.

    ``t`` defaults to r+m and ``s`` to r, the values at which the two term
    formulas coincide for single-helper rectangles.
    """

    helpers: frozenset
    targets: frozenset
    r: int
    t: Optional[int] = None
    s: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "helpers", frozenset(self.helpers))
        object.__setattr__(self, "targets", frozenset(self.targets))
        if not self.helpers or not self.targets:
            raise ParameterRangeError("helpers and targets must be nonempty")
        for value in itertools.chain(self.helpers, self.targets):
            if not isinstance(value, int) or value < 1:
                raise ParameterRangeError("node indices must be positive integers")
        if min(self.helpers) <= max(self.targets):
            raise ParameterRangeError(
                "every helper index must exceed every target index"
            )
        if not isinstance(self.r, int):
            raise ParameterRangeError("r must be an integer")
        if self.t is None:
            object.__setattr__(self, "t", self.r + self.m)
        if self.s is None:
            object.__setattr__(self, "s", self.r)
        if self.r < self.ell:
            raise ParameterRangeError(f"need r >= {self.ell} (the target count)")
        if not isinstance(self.t, int) or self.t < self.r + self.m:
            raise ParameterRangeError(f"need t >= r+m = {self.r + self.m}")
        if not isinstance(self.s, int) or self.s < self.r:
            raise ParameterRangeError(f"need s >= r = {self.r}")

    @property
    def ell(self) -> int:
        return len(self.targets)

    @property
    def m(self) -> int:
        return len(self.helpers)

    def product(self) -> VarSet:
        return helper_product(self.helpers, self.targets)

    def label(self) -> str:
        tgt = f"L{min(self.targets)}-{max(self.targets)}"
        hlp = f"M{min(self.helpers)}-{max(self.helpers)}"
        return f"{tgt}{hlp}r{self.r}t{self.t}s{self.s}"


@dataclass(frozen=True)
class PackingCertificate:
    """A base configuration plus disjoint rectangles, each bounded by a
    per-rectangle replacement term (``term_modes`` records which formula)."""

    params: SystemParams
    q: int
    rectangles: tuple
    term_modes: tuple
    claims: "LinearBound"


@dataclass(frozen=True)
class Combination:
    """A chain certificate refined by rectangles found inside its big sets.

    ``refinements`` holds (step number, rectangle) pairs, steps numbered
    from 1.
    """

    params: SystemParams
    base: ChainCertificate
    refinements: tuple


Provenance = Union[CutSet, ChainCertificate, PackingCertificate, Combination]


@dataclass(frozen=True)
class LinearBound:
    """The statement ``b_multiplier * B <= form`` for every valid system.

    ``provenance`` carries the machine-checkable certificate; ``markers``
    flags caveats (certificates built under relaxed or unproven premises).
    """

    b_multiplier: int
    form: LinearForm
    provenance: Optional[Provenance] = None
    markers: tuple = ()

    def __post_init__(self):
        if not isinstance(self.b_multiplier, int) or self.b_multiplier < 1:
            raise ParameterRangeError("the file-copy multiplier must be >= 1")
        if self.form.alpha_coeff < 0:
            raise ParameterRangeError("the storage coefficient must be >= 0")

    @property
    def c(self) -> int:
        return self.b_multiplier

    @property
    def a(self) -> int:
        return self.form.alpha_coeff

    @property
    def b(self) -> int:
        return self.form.beta_coeff

    def value_at(self, alpha, beta) -> Fraction:
        return self.form.eval_at(alpha, beta) / self.c

    def normalize(self) -> "LinearBound":
        g = gcd(gcd(self.c, abs(self.a)), abs(self.b))
        if g <= 1:
            return self
        return LinearBound(
            self.c // g,
            LinearForm(self.a // g, self.b // g),
            self.provenance,
            self.markers,
        )

    @property
    def dedup_key(self) -> tuple:
        g = gcd(gcd(self.c, abs(self.a)), abs(self.b))
        g = g or 1
        return (self.c // g, self.a // g, self.b // g)

    @property
    def bound_id(self) -> str:
        return _bound_id(self)

    def __str__(self):
        return f"{self.c}*B <= {self.form}"


def _bound_id(bound: LinearBound) -> str:
    prov = bound.provenance
    if isinstance(prov, CutSet):
        return f"cut.q{prov.q}"
    if isinstance(prov, ChainCertificate):
        blocks = "-".join(str(x) for x in prov.q_list)
        if prov.anchored:
            return f"rsu.v{blocks}"
        return f"rs.q{prov.q}.l{prov.ell}.m{prov.m}.v{blocks}"
    if isinstance(prov, PackingCertificate):
        parts = []
        for rect, mode in zip(prov.rectangles, prov.term_modes):
            parts.append(rect.label() + ("a" if mode == AS_STATED else "d"))
        return f"lm.q{prov.q}." + "+".join(parts)
    if isinstance(prov, Combination):
        blocks = "-".join(str(x) for x in prov.base.q_list)
        if prov.base.anchored:
            base_id = f"rsu.v{blocks}"
        else:
            base_id = (
                f"rs.q{prov.base.q}.l{prov.base.ell}.m{prov.base.m}.v{blocks}"
            )
        refs = "+".join(f"{step}x{rect.label()}" for step, rect in prov.refinements)
        return f"cmb.{base_id}.f{refs}" if refs else f"cmb.{base_id}"
    return f"form.c{bound.c}.a{bound.a}.b{bound.b}"


# --- single-configuration bounds --------------------------------------------


def cutset_bounds(params: SystemParams):
    """The k+1 classic bounds, one per intact-node count q."""
    out = []
    for q in range(params.k + 1):
        config = MinimalConfiguration(
            params,
            _node_range(1, q),
            _node_range(q + 1, params.k),
            _node_range(params.k + 1, params.node_count),
        )
        out.append(
            LinearBound(1, bq(params, q), CutSet(params, q, config))
        )
    return out


# --- chained bounds ---------------------------------------------------------


def _require(condition: bool, constraint: str, message: str):
    if not condition:
        raise FeasibilityError(constraint, message)


def _chain_certificate(
    params: SystemParams,
    q: Optional[int],
    ell: int,
    m: int,
    q_list: tuple,
    anchored: bool,
) -> ChainCertificate:
    """Build chain steps; feasibility is the callers' responsibility."""
    k, d = params.k, params.d
    n = params.node_count
    low = _node_range(1, ell)
    mid = _node_range(ell + 1, ell + m)
    tail = tuple(range(ell + m + 1, n + 1))
    u = len(tail)

    blocks = []
    start = 0
    for width in q_list:
        blocks.append(frozenset(tail[(start + off) % u] for off in range(width)))
        start += width
    shared = set(blocks[0])
    for block in blocks[1:]:
        shared &= block
    if shared:
        raise InternalConsistencyError(
            f"cyclic block placement left a common node {sorted(shared)}"
        )
    owner = {}
    for x in tail:
        for index, block in enumerate(blocks):
            if x not in block:
                owner[x] = index
                break

    steps = []
    last_block = len(q_list) - 1
    for index, block in enumerate(blocks):
        fill = [x for x in tail if x not in block][: k - q_list[index] - ell - m]
        repaired = low | mid | frozenset(fill)
        config = MinimalConfiguration(
            params,
            block,
            repaired,
            frozenset(range(1, n + 1)) - block - repaired,
        )
        expanded = config.expand()
        small = set()
        for x in tail:
            if owner[x] == index:
                for target in mid:
                    small.add(Variable.helper(x, target))
        if index == last_block:
            small |= _downward_pairs(mid)
        small = frozenset(small)
        steps.append(ChainStep(expanded - small, small))

    rebuilt = frozenset(tail[: k - ell - m])
    config = MinimalConfiguration(
        params,
        low | mid,
        rebuilt,
        frozenset(tail) - rebuilt,
    )
    expanded = config.expand()
    small = node_set(low)
    steps.append(ChainStep(expanded - small, small))

    if anchored:
        anchor = frozenset({Variable.helper(min(mid), min(low))})
        steps.append(ChainStep(frozenset(), anchor))
    else:
        assert q is not None
        head = frozenset(tail[:q])
        rest = [x for x in tail if x not in head]
        if m <= n - k:
            repaired = low | frozenset(rest[: k - q - ell])
            unused = mid | frozenset(rest[k - q - ell:])
        else:
            # Premise relaxed: tuck the middle band into the rebuilt set.
            repaired = low | mid | frozenset(rest[: k - q - ell - m])
            unused = frozenset(rest[k - q - ell - m:])
        config = MinimalConfiguration(params, head, repaired, unused)
        steps.append(ChainStep(config.expand() - helper_product(mid, low),
                               helper_product(mid, low)))

    steps = tuple(steps)
    total = ZERO_FORM
    for step in steps:
        total = total + var_weight(step.big)
    for step in steps[:-1]:
        total = total + var_weight(step.small)
    if anchored:
        multiplier = len(steps) - 1
        total = total - var_weight(steps[-1].small)
    else:
        multiplier = len(steps)

    expected = bq(params, ell + m) + LinearForm(0, -ell * m)
    for width in q_list:
        expected = expected + bq(params, width)
    if not anchored:
        expected = expected + bq(params, q)
    if total != expected or (anchored and multiplier != len(q_list) + 1):
        raise InternalConsistencyError(
            f"chain accounting {multiplier}*B <= {total} does not match the "
            f"closed form {expected}"
        )

    claims = LinearBound(multiplier, total)
    return ChainCertificate(
        params, steps, anchored, claims, ell, m, tuple(q_list), q
    )


def _check_block_widths(params, ell, m, q_list):
    k, d = params.k, params.d
    u = d + 1 - ell - m
    qmax = min(k - ell - m, u)
    _require(len(q_list) >= 1, "chain-length", "need at least one block width")
    for width in q_list:
        _require(
            isinstance(width, int) and 1 <= width <= qmax,
            "block-width",
            f"each block width must lie in 1..{qmax}, got {width}",
        )
    _require(
        sum(u - width for width in q_list) >= u,
        "block-intersection",
        f"block complements must cover the {u} free nodes: "
        f"sum(u - q_i) = {sum(u - w for w in q_list)} < {u}",
    )


def thm_rs_bound(
    params: SystemParams,
    q: int,
    ell: int,
    m: int,
    q_list: Sequence[int],
    *,
    allow_oversized_final_block: bool = False,
) -> LinearBound:
    """Chained bound: |q_list|+2 file copies against one configuration per
    block width, one for the low band, and one of width q.

    The middle band of width m normally fits among the d+1-k bystander
    nodes of the final step; ``allow_oversized_final_block`` lifts that
    requirement (the certificate then uses an alternative final placement
    and the result is marked "unverified-premise").
    """
    k, d = params.k, params.d
    q_list = tuple(q_list)
    _require(
        isinstance(q, int) and isinstance(ell, int) and isinstance(m, int)
        and q >= 1 and ell >= 1 and m >= 1,
        "positive-parameters",
        f"q, ell, m must be integers >= 1, got {(q, ell, m)}",
    )
    _require(
        q + ell + m <= k,
        "parameter-budget",
        f"need q + ell + m <= k: {q}+{ell}+{m} > {k}",
    )
    markers = ()
    if m > d + 1 - k:
        if not allow_oversized_final_block:
            raise FeasibilityError(
                "final-block-width",
                f"the middle band m={m} exceeds the d+1-k={d + 1 - k} bystander "
                "slots of the final step; pass allow_oversized_final_block=True "
                "to build it anyway",
            )
        markers = ("unverified-premise",)
    _check_block_widths(params, ell, m, q_list)
    cert = _chain_certificate(params, q, ell, m, q_list, anchored=False)
    return LinearBound(cert.claims.c, cert.claims.form, cert, markers)


def thm_rs_bound_unit(params: SystemParams, q_list: Sequence[int]) -> LinearBound:
    """The single-band variant: the final configuration is replaced by one
    bare packet bounded by its own weight, trading one file copy away."""
    q_list = tuple(q_list)
    _check_block_widths(params, 1, 1, q_list)
    cert = _chain_certificate(params, None, 1, 1, q_list, anchored=True)
    return LinearBound(cert.claims.c, cert.claims.form, cert)


# --- rectangle-packing bounds -----------------------------------------------


def p0_term(params: SystemParams, rect: Rectangle) -> LinearForm:
    """Replacement estimate for one rectangle: the bound on the rectangle's
    packets plus ell file copies, before the trivial ell*m packet credit."""
    k, d = params.k, params.d
    _require(
        rect.r + rect.m <= k,
        "rectangle-rank",
        f"need r + m <= k: {rect.r}+{rect.m} > {k}",
    )
    _require(rect.t <= k, "index-t-range", f"need t <= k, got t={rect.t}")
    _require(rect.s <= k, "index-s-range", f"need s <= k, got s={rect.s}")
    _require(
        max(rect.helpers) <= params.node_count,
        "helper-region",
        f"helpers must be nodes <= {params.node_count}",
    )
    ell = rect.ell
    return (
        bq(params, rect.t)
        + bq(params, rect.s).scaled(ell - 1)
        + LinearForm(-ell, ell * (d - rect.r + 1))
    )


def _packing_term(params: SystemParams, rect: Rectangle, mode: str) -> LinearForm:
    if mode == AS_STATED:
        head = bq(params, rect.r + rect.m - 1)
        if rect.ell == 1:
            return head
        return head + (bq(params, rect.r + rect.m - 2) - BETA).scaled(rect.ell - 1)
    return p0_term(params, rect) + LinearForm(0, -rect.ell * rect.m)


def _resolve_modes(rectangles, mode):
    if mode not in (None, AS_STATED, DERIVED):
        raise ParameterRangeError(f"unknown mode {mode!r}")
    modes = []
    markers = set()
    for rect in rectangles:
        resolved = mode if mode is not None else (
            AS_STATED if rect.m == 1 else DERIVED
        )
        if resolved == AS_STATED and rect.m >= 2:
            markers.add("as-published")
        modes.append(resolved)
    return tuple(modes), tuple(sorted(markers))


def _check_rectangle_for_params(params, rect, position: str):
    k = params.k
    _require(
        rect.r + rect.m <= k,
        "rectangle-rank",
        f"{position}: need r + m <= k, got {rect.r}+{rect.m} > {k}",
    )
    _require(rect.t <= k, "index-t-range", f"{position}: need t <= k, got {rect.t}")
    _require(rect.s <= k, "index-s-range", f"{position}: need s <= k, got {rect.s}")
    _require(
        max(rect.helpers) <= params.node_count,
        "helper-region",
        f"{position}: helpers must be nodes <= {params.node_count}",
    )


def thm_lm_bound(
    params: SystemParams,
    q: int,
    rectangles: Sequence[Rectangle],
    mode: Optional[str] = None,
) -> LinearBound:
    """Packing bound: 1 + sum(ell) file copies against a width-q
    configuration plus one replacement term per rectangle.

    ``mode`` picks the term formula for every rectangle; by default
    single-helper rectangles use the direct formula and wider ones the
    chained derivation (they agree at m=1 with t=r+1, s=r).
    """
    k = params.k
    rects = tuple(rectangles)
    _require(
        isinstance(q, int) and 0 <= q <= k,
        "q-range",
        f"need 0 <= q <= k, got q={q}",
    )
    region = set(range(q + 1, k + 1))
    for index, rect in enumerate(rects, start=1):
        _require(
            rect.targets <= region,
            "target-region",
            f"rectangle {index}: targets must lie in {q + 1}..{k}",
        )
        _require(
            rect.ell <= k - q,
            "target-count",
            f"rectangle {index}: at most k-q={k - q} targets",
        )
        _check_rectangle_for_params(params, rect, f"rectangle {index}")
    for (i, first), (j, second) in itertools.combinations(enumerate(rects, 1), 2):
        _require(
            not (first.targets & second.targets and first.helpers & second.helpers),
            "rectangle-overlap",
            f"rectangles {i} and {j} share helper packets",
        )
    modes, markers = _resolve_modes(rects, mode)
    form = bq(params, q)
    for rect, term_mode in zip(rects, modes):
        form = form + _packing_term(params, rect, term_mode)
    multiplier = 1 + sum(rect.ell for rect in rects)
    claims = LinearBound(multiplier, form)
    cert = PackingCertificate(params, q, rects, modes, claims)
    return LinearBound(multiplier, form, cert, markers)


# --- chain + rectangle combinations -----------------------------------------


def _combination_claims(params, base: ChainCertificate, refinements):
    multiplier = base.claims.c
    form = base.claims.form
    for _, rect in refinements:
        multiplier += rect.ell
        form = form + p0_term(params, rect) + LinearForm(0, -rect.ell * rect.m)
    return multiplier, form


def combine_rs_p0(
    params: SystemParams,
    base: ChainCertificate,
    refinements: Sequence,
) -> LinearBound:
    """Refine a chain: each (step number, rectangle) trades the rectangle's
    packets out of that step's big set for its replacement term, adding
    ell file copies to the left side.

    Rectangles refining the same step must not share packets; steps are
    numbered from 1.
    """
    if not isinstance(base, ChainCertificate):
        raise ParameterRangeError("base must be a chain certificate")
    if base.params != params:
        raise ParameterRangeError("base certificate belongs to different parameters")
    refs = tuple((step, rect) for step, rect in refinements)
    seen = set()
    per_step = {}
    for step_no, rect in refs:
        if not isinstance(step_no, int) or not 1 <= step_no <= len(base.steps):
            raise RefinementError(
                f"step {step_no} outside 1..{len(base.steps)}"
            )
        if not isinstance(rect, Rectangle):
            raise ParameterRangeError("refinements must carry rectangles")
        if (step_no, rect) in seen:
            raise RefinementError(
                f"refinement {rect.label()} repeated at step {step_no}"
            )
        seen.add((step_no, rect))
        _check_rectangle_for_params(params, rect, f"step {step_no} refinement")
        product = rect.product()
        missing = product - base.steps[step_no - 1].big
        if missing:
            raise RefinementError(
                f"step {step_no} does not contain {_fmt_vars(missing)}"
            )
        for other in per_step.get(step_no, []):
            if other & product:
                raise RefinementError(
                    f"refinements overlap inside step {step_no}"
                )
        per_step.setdefault(step_no, []).append(product)
    multiplier, form = _combination_claims(params, base, refs)
    return LinearBound(multiplier, form, Combination(params, base, refs))


# --- certificate verification -----------------------------------------------


def _subset_check(name, params, seed_mask, wanted: VarSet, checks) -> bool:
    closed = _closure_mask(params, seed_mask)
    want = _to_mask(params, wanted)
    if closed & want == want:
        checks.append(CheckResult(name, True))
        return True
    missing_mask = want & ~closed
    missing = [v for v in wanted if _to_mask(params, frozenset({v})) & missing_mask]
    checks.append(
        CheckResult(name, False, f"underivable: {_fmt_vars(missing)}")
    )
    return False


def _check_chain(params, cert: ChainCertificate, checks) -> bool:
    steps = cert.steps
    n = len(steps)
    if cert.anchored:
        last = steps[-1]
        shape_ok = (
            n >= 2
            and not last.big
            and len(last.small) == 1
            and next(iter(last.small)).kind == "s"
        )
        checks.append(
            CheckResult(
                "anchor-shape",
                shape_ok,
                "" if shape_ok else
                "anchored chains end with an empty big set and one packet",
            )
        )
        if not shape_ok:
            return False

    big_masks = [_to_mask(params, step.big) for step in steps]
    joint_masks = [
        mask | _to_mask(params, step.small)
        for mask, step in zip(big_masks, steps)
    ]

    idx = _indexing(params)
    for i, joint in enumerate(joint_masks):
        if cert.anchored and i == n - 1:
            continue
        closed = _closure_mask(params, joint)
        ok = bool(closed & idx.message_bit)
        checks.append(
            CheckResult(
                f"file-recovery-step{i + 1}",
                ok,
                "" if ok else "the file is not derivable from this step",
            )
        )
        if not ok:
            return False

    for i in range(n):
        for j in range(i + 1, n):
            if not steps[j].small:
                continue
            if not _subset_check(
                f"step{i + 1}-derives-small{j + 1}",
                params,
                big_masks[i],
                steps[j].small,
                checks,
            ):
                return False

    earlier = frozenset().union(*[step.small for step in steps[:-1]]) if n > 1 else frozenset()
    if not _subset_check(
        "final-small-from-earlier",
        params,
        _to_mask(params, earlier),
        steps[-1].small,
        checks,
    ):
        return False

    total = ZERO_FORM
    for step in steps:
        total = total + var_weight(step.big)
    for step in steps[:-1]:
        total = total + var_weight(step.small)
    if cert.anchored:
        multiplier = n - 1
        total = total - var_weight(steps[-1].small)
    else:
        multiplier = n
    ok = multiplier == cert.claims.c and total == cert.claims.form
    checks.append(
        CheckResult(
            "claims-recomputed",
            ok,
            "" if ok else
            f"steps give {multiplier}*B <= {total}, certificate claims "
            f"{cert.claims.c}*B <= {cert.claims.form}",
        )
    )
    return ok


def _proportional(bound: LinearBound, multiplier: int, form: LinearForm) -> bool:
    # The published triple may be scaled down; accept any positive multiple.
    return (
        bound.a * multiplier == form.alpha_coeff * bound.c
        and bound.b * multiplier == form.beta_coeff * bound.c
    )


def _check_published(bound: LinearBound, claims: LinearBound, checks) -> bool:
    ok = _proportional(bound, claims.c, claims.form)
    checks.append(
        CheckResult(
            "claims-published",
            ok,
            "" if ok else
            f"bound states {bound.c}*B <= {bound.form}, certificate claims "
            f"{claims.c}*B <= {claims.form}",
        )
    )
    return ok


def _check_cutset(bound: LinearBound, prov: CutSet, checks):
    params = prov.params
    config = prov.configuration
    ok = prov.q == config.q
    checks.append(
        CheckResult(
            "configuration-width",
            ok,
            "" if ok else f"q={prov.q} but {config.q} intact nodes",
        )
    )
    if not ok:
        return
    expanded = config.expand()
    expected = bq(params, prov.q)
    weight = var_weight(expanded)
    ok = weight == expected
    checks.append(
        CheckResult(
            "configuration-weight",
            ok,
            "" if ok else f"weighs {weight}, expected {expected}",
        )
    )
    if not ok:
        return
    if not _subset_check(
        "file-recovery", params, _to_mask(params, expanded),
        frozenset({MESSAGE}), checks,
    ):
        return
    _check_published(bound, LinearBound(1, expected), checks)


def _check_packing(params, cert: PackingCertificate, checks) -> bool:
    k = params.k
    ok = (
        isinstance(cert.q, int)
        and 0 <= cert.q <= k
        and len(cert.term_modes) == len(cert.rectangles)
        and all(mode in (AS_STATED, DERIVED) for mode in cert.term_modes)
    )
    checks.append(
        CheckResult(
            "packing-shape",
            ok,
            "" if ok else "bad width q or term-mode list",
        )
    )
    if not ok:
        return False
    region = set(range(cert.q + 1, k + 1))
    for index, rect in enumerate(cert.rectangles, start=1):
        problems = []
        if not rect.targets <= region:
            problems.append(f"targets outside {cert.q + 1}..{k}")
        if rect.r + rect.m > k:
            problems.append("r + m > k")
        if rect.t > k or rect.s > k:
            problems.append("cut index above k")
        if max(rect.helpers) > params.node_count:
            problems.append("helper beyond the last node")
        ok = not problems
        checks.append(
            CheckResult(
                f"rectangle{index}-ranges",
                ok,
                "" if ok else "; ".join(problems),
            )
        )
        if not ok:
            return False
    for (i, first), (j, second) in itertools.combinations(
        enumerate(cert.rectangles, 1), 2
    ):
        if first.targets & second.targets and first.helpers & second.helpers:
            checks.append(
                CheckResult(
                    "rectangles-disjoint",
                    False,
                    f"rectangles {i} and {j} share packets",
                )
            )
            return False
    checks.append(CheckResult("rectangles-disjoint", True))
    form = bq(params, cert.q)
    for rect, mode in zip(cert.rectangles, cert.term_modes):
        form = form + _packing_term(params, rect, mode)
    multiplier = 1 + sum(rect.ell for rect in cert.rectangles)
    ok = multiplier == cert.claims.c and form == cert.claims.form
    checks.append(
        CheckResult(
            "claims-recomputed",
            ok,
            "" if ok else
            f"packing gives {multiplier}*B <= {form}, certificate claims "
            f"{cert.claims.c}*B <= {cert.claims.form}",
        )
    )
    return ok


def _check_combination(bound: LinearBound, prov: Combination, checks):
    params = prov.params
    if not _check_chain(params, prov.base, checks):
        return
    seen = set()
    per_step = {}
    for step_no, rect in prov.refinements:
        position = f"refinement-step{step_no}"
        if not isinstance(step_no, int) or not 1 <= step_no <= len(prov.base.steps):
            checks.append(
                CheckResult(position, False, "step number out of range")
            )
            return
        if (step_no, rect) in seen:
            checks.append(
                CheckResult(position, False, f"{rect.label()} used twice")
            )
            return
        seen.add((step_no, rect))
        problems = []
        if rect.r + rect.m > params.k:
            problems.append("r + m > k")
        if rect.t > params.k or rect.s > params.k:
            problems.append("cut index above k")
        if max(rect.helpers) > params.node_count:
            problems.append("helper beyond the last node")
        product = rect.product()
        missing = product - prov.base.steps[step_no - 1].big
        if missing:
            problems.append(f"missing {_fmt_vars(missing)}")
        for other in per_step.get(step_no, []):
            if other & product:
                problems.append("overlaps another refinement in this step")
        per_step.setdefault(step_no, []).append(product)
        ok = not problems
        checks.append(
            CheckResult(position, ok, "" if ok else "; ".join(problems))
        )
        if not ok:
            return
    multiplier, form = _combination_claims(params, prov.base, prov.refinements)
    ok = _proportional(bound, multiplier, form)
    checks.append(
        CheckResult(
            "claims-recomputed",
            ok,
            "" if ok else
            f"combination gives {multiplier}*B <= {form}, bound states "
            f"{bound.c}*B <= {bound.form}",
        )
    )


def verify_certificate(bound: LinearBound) -> VerificationReport:
    """Re-derive a bound from its certificate and compare exactly.

    Returns a structured report; the first failed check carries the
    witnesses.  Raises nothing on well-formed input.
    """
    checks = []
    prov = bound.provenance
    try:
        if isinstance(prov, CutSet):
            _check_cutset(bound, prov, checks)
        elif isinstance(prov, ChainCertificate):
            if _check_chain(prov.params, prov, checks):
                _check_published(bound, prov.claims, checks)
        elif isinstance(prov, PackingCertificate):
            if _check_packing(prov.params, prov, checks):
                _check_published(bound, prov.claims, checks)
        elif isinstance(prov, Combination):
            _check_combination(bound, prov, checks)
        else:
            checks.append(
                CheckResult("provenance", False, "no certificate attached")
            )
    except RegenBoundsError as exc:
        checks.append(CheckResult("well-formed", False, str(exc)))
    return make_report(checks)


# --- enumeration ------------------------------------------------------------


@dataclass(frozen=True)
class EnumerationLimits:
    """Caps for the bound enumerator.

    ``max_chain_steps`` limits certificate length, ``max_rectangles`` the
    rectangles per packing, ``max_refinements`` the rectangles grafted onto
    one chain, and ``multiset_budget`` the rectangle-shape combinations
    examined per configuration width.
    """

    max_chain_steps: int = 6
    max_rectangles: int = 4
    max_refinements: int = 8
    multiset_budget: int = 1500

    def __post_init__(self):
        for name in (
            "max_chain_steps", "max_rectangles", "max_refinements",
            "multiset_budget",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ParameterRangeError(f"{name} must be a positive integer")


@dataclass(frozen=True)
class EnumerationResult:
    bounds: tuple
    truncated: bool


_TYPE_RANK = {CutSet: 0, ChainCertificate: 1, PackingCertificate: 2, Combination: 3}


def _provenance_steps(bound: LinearBound) -> int:
    prov = bound.provenance
    if isinstance(prov, ChainCertificate):
        return len(prov.steps)
    if isinstance(prov, Combination):
        return len(prov.base.steps)
    return 1


class _Collector:
    def __init__(self):
        self._best = {}

    def add(self, bound: LinearBound):
        key = bound.dedup_key
        rank = (
            _provenance_steps(bound),
            _TYPE_RANK.get(type(bound.provenance), 9),
            bound.bound_id,
        )
        current = self._best.get(key)
        if current is None or rank < current[0]:
            self._best[key] = (rank, bound)

    def sorted_bounds(self):
        return tuple(
            item[1][1] for item in sorted(self._best.items(), key=lambda kv: kv[0])
        )


def _chain_instances(params, limits):
    """All feasible chained bounds within the caps, plain then anchored."""
    k, d = params.k, params.d
    out = []
    max_blocks = limits.max_chain_steps - 2
    if k < 3 or max_blocks < 2:
        return out
    for q in range(1, k - 1):
        for ell in range(1, k - q):
            for m in range(1, min(k - q - ell, d + 1 - k) + 1):
                u = d + 1 - ell - m
                qmax = min(k - ell - m, u)
                for count in range(2, max_blocks + 1):
                    for q_list in itertools.combinations_with_replacement(
                        range(1, qmax + 1), count
                    ):
                        if sum(u - width for width in q_list) < u:
                            continue
                        out.append(thm_rs_bound(params, q, ell, m, q_list))
    u = d - 1
    qmax = min(k - 2, u)
    if qmax >= 1:
        for count in range(2, max_blocks + 1):
            for q_list in itertools.combinations_with_replacement(
                range(1, qmax + 1), count
            ):
                if sum(u - width for width in q_list) < u:
                    continue
                out.append(thm_rs_bound_unit(params, q_list))
    return out


def _shape_options(params, shape, mode):
    """Term lines (slope, intercept, (r, t, s)) for one rectangle shape."""
    k = params.k
    ell, m = shape
    options = []
    resolved = mode if mode is not None else (AS_STATED if m == 1 else DERIVED)
    template_helpers = _node_range(ell + 1, ell + m)
    template_targets = _node_range(1, ell)
    if resolved == AS_STATED:
        for r in range(ell, k - m + 1):
            rect = Rectangle(template_helpers, template_targets, r)
            form = _packing_term(params, rect, AS_STATED)
            options.append(
                (form.alpha_coeff, form.beta_coeff, (r, r + m, r))
            )
    else:
        seen = set()
        for t in range(ell + m, k + 1):
            for s in range(ell, k + 1):
                r = min(t - m, s, k - m)
                if r < ell:
                    continue
                rect = Rectangle(template_helpers, template_targets, r, t, s)
                form = _packing_term(params, rect, DERIVED)
                choice = (r, t, s)
                if choice in seen:
                    continue
                seen.add(choice)
                options.append((form.alpha_coeff, form.beta_coeff, choice))
    options.sort(key=lambda item: item[2])
    return options


def _envelope_choices(envelopes):
    """One payload tuple per region where the per-group minimizers are
    constant; ``envelopes`` is a list of line_minimum_envelope outputs."""
    breaks = sorted({segment[0] for env in envelopes for segment in env})
    picks = []
    seen = set()
    for index, lo in enumerate(breaks):
        hi = breaks[index + 1] if index + 1 < len(breaks) else None
        sample = (lo + hi) / 2 if hi is not None else lo + 1
        combo = []
        for env in envelopes:
            active = env[0][2]
            for seg_lo, _, payload in env:
                if seg_lo <= sample:
                    active = payload
                else:
                    break
            combo.append(active)
        combo = tuple(combo)
        if combo not in seen:
            seen.add(combo)
            picks.append(combo)
    return picks


class _PlacementBudget(Exception):
    pass


def _intervals_clash(first, second):
    a1, b1, e1, m1 = first
    a2, b2, e2, m2 = second
    targets_meet = a1 <= a2 + e2 - 1 and a2 <= a1 + e1 - 1
    helpers_meet = b1 <= b2 + m2 - 1 and b2 <= b1 + m1 - 1
    return targets_meet and helpers_meet


@lru_cache(maxsize=None)
def _find_placement(params, q, multiset):
    """First interval placement with pairwise-disjoint packets, or None.

    Returns (placement, budget_blown): placement is a tuple of (target
    start, helper start) per shape, in multiset order.
    """
    k, n = params.k, params.node_count
    counter = [0]

    def descend(index, placed):
        counter[0] += 1
        if counter[0] > 20000:
            raise _PlacementBudget()
        if index == len(multiset):
            return True
        ell, m = multiset[index]
        floor = (q + 1, 0)
        if index > 0 and multiset[index - 1] == (ell, m):
            floor = (placed[-1][0], placed[-1][1])
        for a in range(q + 1, k - ell + 2):
            for b in range(a + ell, n - m + 2):
                if (a, b) < floor:
                    continue
                candidate = (a, b, ell, m)
                if any(
                    _intervals_clash(candidate, (pa, pb, pe, pm))
                    for pa, pb, pe, pm in placed
                ):
                    continue
                placed.append(candidate)
                if descend(index + 1, placed):
                    return True
                placed.pop()
        return False

    placed = []
    try:
        if descend(0, placed):
            return tuple((a, b) for a, b, _, _ in placed), False
        return None, False
    except _PlacementBudget:
        return None, True


def _packing_instances(params, limits, mode, collector):
    """Emit, per configuration width and shape multiset, one packing per
    region of the term envelope.  Returns True when anything was cut off."""
    k, n = params.k, params.node_count
    truncated = False
    for q in range(0, k - 1):
        shapes = []
        for ell in range(2, min(k - q, k - 1) + 1):
            for m in range(1, n - q - ell + 1):
                if _shape_options(params, (ell, m), mode):
                    shapes.append((ell, m))
        budget = limits.multiset_budget
        exhausted = False
        for size in range(1, limits.max_rectangles + 1):
            if exhausted:
                break
            for multiset in itertools.combinations_with_replacement(shapes, size):
                if budget == 0:
                    truncated = True
                    exhausted = True
                    break
                budget -= 1
                placement, blown = _find_placement(params, q, multiset)
                if blown:
                    truncated = True
                if placement is None:
                    continue
                group_shapes = sorted(set(multiset))
                envelopes = [
                    line_minimum_envelope(_shape_options(params, shape, mode))
                    for shape in group_shapes
                ]
                position = {shape: i for i, shape in enumerate(group_shapes)}
                for combo in _envelope_choices(envelopes):
                    rects = []
                    for shape, (a, b) in zip(multiset, placement):
                        ell, m = shape
                        r, t, s = combo[position[shape]]
                        rects.append(
                            Rectangle(
                                _node_range(b, b + m - 1),
                                _node_range(a, a + ell - 1),
                                r, t, s,
                            )
                        )
                    collector.add(thm_lm_bound(params, q, tuple(rects), mode))
    return truncated


def _refinement_sites(params, cert: ChainCertificate):
    """Maximal multi-target single-helper blocks literally inside big sets."""
    k = params.k
    sites = []
    for step_no, step in enumerate(cert.steps, start=1):
        by_helper = {}
        for variable in step.big:
            if variable.kind == "s" and variable.dst < variable.src:
                by_helper.setdefault(variable.src, set()).add(variable.dst)
        for helper in sorted(by_helper):
            targets = sorted(by_helper[helper])
            run = [targets[0]]
            runs = []
            for value in targets[1:]:
                if value == run[-1] + 1:
                    run.append(value)
                else:
                    runs.append(run)
                    run = [value]
            runs.append(run)
            for run in runs:
                if 2 <= len(run) <= k - 1:
                    sites.append((step_no, helper, tuple(run)))
    return sites


def _combination_instances(params, limits, chain_bounds, collector):
    truncated = False
    for base_bound in chain_bounds:
        cert = base_bound.provenance
        sites = _refinement_sites(params, cert)
        if len(sites) > limits.max_refinements:
            sites = sites[: limits.max_refinements]
            truncated = True
        if not sites:
            continue
        site_options = []
        for step_no, helper, run in sites:
            targets = frozenset(run)
            helpers = frozenset({helper})
            ell = len(run)
            lines = []
            by_choice = {}
            for r in range(ell, params.k):
                rect = Rectangle(helpers, targets, r, r + 1, r)
                contribution = p0_term(params, rect) + LinearForm(0, -ell)
                lines.append(
                    (contribution.alpha_coeff, contribution.beta_coeff, r)
                )
                by_choice[r] = (step_no, rect, contribution)
            if not lines:
                site_options = []
                break
            site_options.append(
                (line_minimum_envelope(lines), by_choice)
            )
        if not site_options:
            continue
        for combo in _envelope_choices([env for env, _ in site_options]):
            multiplier = cert.claims.c
            form = cert.claims.form
            refs = []
            for choice, (_, by_choice) in zip(combo, site_options):
                step_no, rect, contribution = by_choice[choice]
                refs.append((step_no, rect))
                multiplier += rect.ell
                form = form + contribution
            collector.add(
                LinearBound(
                    multiplier, form, Combination(params, cert, tuple(refs))
                )
            )
    return truncated


@lru_cache(maxsize=64)
def _enumerate(params: SystemParams, limits: EnumerationLimits, mode):
    collector = _Collector()
    for bound in cutset_bounds(params):
        collector.add(bound)
    chain_bounds = _chain_instances(params, limits)
    for bound in chain_bounds:
        collector.add(bound)
    truncated = _packing_instances(params, limits, mode, collector)
    if _combination_instances(params, limits, chain_bounds, collector):
        truncated = True
    return EnumerationResult(collector.sorted_bounds(), truncated)


def enumerate_bounds(
    params: SystemParams,
    limits: Optional[EnumerationLimits] = None,
    mode: Optional[str] = None,
) -> EnumerationResult:
    """Every bound this package can generate within the caps: the k+1
    classic bounds, all feasible chains (both variants), packings over
    interval rectangles with all term indices scanned, and each chain
    combined with every rectangle block found inside its steps.

    The result is deduplicated on normalized coefficients (shortest
    certificate kept) and deterministically ordered.  ``truncated`` is set
    when any cap cut the search off.
    """
    if limits is None:
        limits = EnumerationLimits()
    if mode not in (None, AS_STATED, DERIVED):
        raise ParameterRangeError(f"unknown mode {mode!r}")
    return _enumerate(params, limits, mode)
