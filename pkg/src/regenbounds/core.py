"""Exact-arithmetic foundations for storage/repair bound calculations.

This module holds the shared substrate everything else consumes: system
parameters, the two-coefficient linear forms bounds are expressed in,
symbolic random variables over a (d+1)-node storage system, and the
functional-dependency closure engine used to check certificates.

No floating point is used anywhere; ratios are `fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional, Union

# Exact rational scalar used across the package.
Rational = Fraction

RationalLike = Union[int, Fraction]


class RegenBoundsError(Exception):
    """Base class for domain errors raised by this package."""


class ParameterRangeError(RegenBoundsError, ValueError):
    """A parameter is outside its documented range."""


class FeasibilityError(RegenBoundsError):
    """Generator parameters violate a named precondition.

    ``constraint`` is a short machine-readable name of the violated
    condition; the message spells it out.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


class InternalConsistencyError(RegenBoundsError):
    """A constructive selection failed where preconditions promise success."""


class RefinementError(RegenBoundsError):
    """A refinement does not fit the certificate step it names."""


class CodeSpecError(RegenBoundsError):
    """A concrete code description is malformed or missing a component."""


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of a verifier: overall flag plus per-check results."""

    ok: bool
    checks: tuple[CheckResult, ...]

    @property
    def first_failure(self) -> Optional[CheckResult]:
        for check in self.checks:
            if not check.ok:
                return check
        return None

    def summary(self) -> str:
        if self.ok:
            return "PASS"
        failure = self.first_failure
        if failure is None:
            return "FAIL"
        detail = f": {failure.detail}" if failure.detail else ""
        return f"FAIL at {failure.name}{detail}"


def make_report(checks: Iterable[CheckResult]) -> VerificationReport:
    checks = tuple(checks)
    return VerificationReport(ok=all(c.ok for c in checks), checks=checks)


@dataclass(frozen=True, order=True)
class SystemParams:
    """Storage-system shape: any k of the d+1 nodes recover the file, and a
    lost node is rebuilt from the d remaining ones.

    Bounds are always computed on the (d+1)-node universe; they carry over
    to systems with more nodes and the same (k, d).
    """

    k: int
    d: int

    def __post_init__(self):
        if not (isinstance(self.k, int) and isinstance(self.d, int)):
            raise ParameterRangeError("k and d must be integers")
        if not 1 <= self.k <= self.d:
            raise ParameterRangeError(
                f"need 1 <= k <= d, got k={self.k}, d={self.d}"
            )

    @property
    def node_count(self) -> int:
        return self.d + 1


@dataclass(frozen=True, order=True)
class LinearForm:
    """An exact integer combination a*alpha + b*beta of the per-node storage
    unit (alpha) and the per-helper bandwidth unit (beta)."""

    alpha_coeff: int
    beta_coeff: int

    def __post_init__(self):
        if not (isinstance(self.alpha_coeff, int) and isinstance(self.beta_coeff, int)):
            raise ParameterRangeError("linear form coefficients must be integers")

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.alpha_coeff + other.alpha_coeff,
                          self.beta_coeff + other.beta_coeff)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.alpha_coeff - other.alpha_coeff,
                          self.beta_coeff - other.beta_coeff)

    def scaled(self, factor: int) -> "LinearForm":
        return LinearForm(self.alpha_coeff * factor, self.beta_coeff * factor)

    def eval_at(self, alpha: RationalLike, beta: RationalLike) -> Fraction:
        return Fraction(alpha) * self.alpha_coeff + Fraction(beta) * self.beta_coeff

    def __str__(self) -> str:
        return f"{self.alpha_coeff}a+{self.beta_coeff}b"


ZERO_FORM = LinearForm(0, 0)
ALPHA = LinearForm(1, 0)
BETA = LinearForm(0, 1)


@dataclass(frozen=True, order=True)
class Variable:
    """One symbolic random variable of the storage system.

    kind "m": the stored file; kind "w": the full content of node ``src``;
    kind "s": the packet node ``src`` sends to rebuild node ``dst``.
    """

    kind: str
    src: int = 0
    dst: int = 0

    def __post_init__(self):
        if self.kind == "m":
            ok = self.src == 0 and self.dst == 0
        elif self.kind == "w":
            ok = self.src >= 1 and self.dst == 0
        elif self.kind == "s":
            ok = self.src >= 1 and self.dst >= 1 and self.src != self.dst
        else:
            ok = False
        if not ok:
            raise ParameterRangeError(f"invalid variable ({self.kind}, {self.src}, {self.dst})")

    @classmethod
    def message(cls) -> "Variable":
        return cls("m")

    @classmethod
    def node(cls, i: int) -> "Variable":
        return cls("w", i)

    @classmethod
    def helper(cls, i: int, j: int) -> "Variable":
        """Packet sent by node i toward rebuilding node j."""
        return cls("s", i, j)

    def __str__(self) -> str:
        if self.kind == "m":
            return "m"
        if self.kind == "w":
            return f"w{self.src}"
        return f"s{self.src}>{self.dst}"


VarSet = frozenset  # frozenset[Variable]

MESSAGE = Variable.message()


def node_set(indices: Iterable[int]) -> VarSet:
    return frozenset(Variable.node(i) for i in indices)


def helper_product(sources: Iterable[int], targets: Iterable[int]) -> VarSet:
    """All packets from every source toward every (distinct) target."""
    targets = tuple(targets)
    return frozenset(Variable.helper(i, j)
                     for i in sources for j in targets if i != j)


@lru_cache(maxsize=None)
def universe(params: SystemParams) -> VarSet:
    n = params.node_count
    out = {MESSAGE}
    out.update(Variable.node(i) for i in range(1, n + 1))
    out.update(Variable.helper(i, j)
               for i in range(1, n + 1) for j in range(1, n + 1) if i != j)
    return frozenset(out)


def bq(params: SystemParams, q: int) -> LinearForm:
    """Storage/bandwidth cost of a minimal cut with q intact nodes.

    Returns q*alpha + [C(k-q, 2) + (d+1-k)(k-q)]*beta.
    """
    if not isinstance(q, int) or not 0 <= q <= params.k:
        raise ParameterRangeError(f"need 0 <= q <= k={params.k}, got q={q!r}")
    rebuilt = params.k - q
    beta_count = rebuilt * (rebuilt - 1) // 2 + (params.d + 1 - params.k) * rebuilt
    return LinearForm(q, beta_count)


def functional_envelope_value(
    params: SystemParams, alpha: RationalLike, beta: RationalLike
) -> tuple[Fraction, int]:
    """Smallest cut value over all intact-node counts, with the smallest
    minimizing count reported on ties."""
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if alpha < 0 or beta < 0 or (alpha == 0 and beta == 0):
        raise ParameterRangeError(
            "alpha and beta must be nonnegative and not both zero"
        )
    best: Optional[Fraction] = None
    best_q = 0
    for q in range(params.k + 1):
        value = bq(params, q).eval_at(alpha, beta)
        if best is None or value < best:
            best = value
            best_q = q
    assert best is not None
    return best, best_q


def var_weight(variables: VarSet) -> LinearForm:
    """Total observable weight: alpha per node variable, beta per packet.

    The file variable weighs nothing; certificates never count it.  The
    weight upper-bounds the joint entropy of the set.
    """
    nodes = 0
    packets = 0
    for v in variables:
        if v.kind == "w":
            nodes += 1
        elif v.kind == "s":
            packets += 1
    return LinearForm(nodes, packets)


# --- dependency-closure engine ----------------------------------------------
#
# Sets of variables are mirrored into integer bitmasks for speed; the public
# API stays frozenset-based.  Index layout per params: bit 0 the file, bits
# 1..n the node contents, then packets in (src, dst) lexicographic order.


class _Indexing(NamedTuple):
    variables: tuple[Variable, ...]
    index: dict
    message_bit: int
    node_bits: tuple[int, ...]          # node_bits[i] for i in 1..n (0 unused)
    all_nodes_mask: int
    outgoing_mask: tuple[int, ...]      # all packets sent by node i
    incoming_bits: tuple[tuple[int, ...], ...]  # packet bits arriving at node j


@lru_cache(maxsize=None)
def _indexing(params: SystemParams) -> _Indexing:
    n = params.node_count
    variables = [MESSAGE]
    variables += [Variable.node(i) for i in range(1, n + 1)]
    variables += [Variable.helper(i, j)
                  for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    index = {v: pos for pos, v in enumerate(variables)}
    node_bits = [0] * (n + 1)
    for i in range(1, n + 1):
        node_bits[i] = 1 << index[Variable.node(i)]
    outgoing = [0] * (n + 1)
    incoming: list[list[int]] = [[] for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            bit = 1 << index[Variable.helper(i, j)]
            outgoing[i] |= bit
            incoming[j].append(bit)
    return _Indexing(
        variables=tuple(variables),
        index=index,
        message_bit=1,
        node_bits=tuple(node_bits),
        all_nodes_mask=sum(node_bits),
        outgoing_mask=tuple(outgoing),
        incoming_bits=tuple(tuple(bits) for bits in incoming),
    )


def _to_mask(params: SystemParams, variables: VarSet) -> int:
    idx = _indexing(params)
    mask = 0
    for v in variables:
        pos = idx.index.get(v)
        if pos is None:
            raise ParameterRangeError(
                f"variable {v} does not exist for d={params.d}"
            )
        mask |= 1 << pos
    return mask


def _from_mask(params: SystemParams, mask: int) -> VarSet:
    idx = _indexing(params)
    return frozenset(v for pos, v in enumerate(idx.variables) if mask >> pos & 1)


def _close_mask(params: SystemParams, mask: int) -> int:
    """Least fixpoint of the four derivation rules, on bitmasks."""
    idx = _indexing(params)
    n = params.node_count
    d = params.d
    k = params.k
    node_bits = idx.node_bits
    while True:
        before = mask
        # A node's content determines every packet it can send.
        for i in range(1, n + 1):
            if mask & node_bits[i]:
                mask |= idx.outgoing_mask[i]
        # Packets from d distinct senders rebuild the receiving node.
        for j in range(1, n + 1):
            if mask & node_bits[j]:
                continue
            arrived = sum(1 for bit in idx.incoming_bits[j] if mask & bit)
            if arrived >= d:
                mask |= node_bits[j]
        # Any k node contents determine the file; the file determines all nodes.
        if not mask & idx.message_bit:
            present = sum(1 for i in range(1, n + 1) if mask & node_bits[i])
            if present >= k:
                mask |= idx.message_bit
        if mask & idx.message_bit:
            mask |= idx.all_nodes_mask
        if mask == before:
            return mask


def dependency_closure(params: SystemParams, seed: VarSet) -> VarSet:
    """Everything derivable from ``seed``: node contents determine their
    outgoing packets, d distinct incoming packets rebuild a node, any k
    nodes determine the file, and the file determines every node.

    The result is the least fixpoint, so it is deterministic, monotone in
    the seed, idempotent, and contains the seed.
    """
    return _from_mask(params, _close_mask(params, _to_mask(params, seed)))


def closure_contains(params: SystemParams, seed: VarSet, wanted: VarSet) -> bool:
    want = _to_mask(params, wanted)
    have = _close_mask(params, _to_mask(params, seed))
    return have & want == want


# --- exact lower envelope of lines ------------------------------------------


def line_minimum_envelope(lines):
    """Pointwise minimum of lines ``y = slope*x + offset`` over x in [0, inf).

    ``lines`` is a sequence of (slope, offset, payload) with rational
    coefficients.  Returns segments (lo, hi, payload), hi None meaning
    +infinity, partitioning [0, inf).  When several lines coincide the
    earliest in the input wins, so callers control tie-breaking by
    pre-sorting.  Exact rational arithmetic throughout.
    """
    cleaned = []
    best_for_slope: dict = {}
    for order, (slope, offset, payload) in enumerate(lines):
        slope = Fraction(slope)
        offset = Fraction(offset)
        prev = best_for_slope.get(slope)
        if prev is None or offset < prev[0]:
            best_for_slope[slope] = (offset, order, payload)
    if not best_for_slope:
        raise ParameterRangeError("need at least one line")
    for slope, (offset, order, payload) in best_for_slope.items():
        cleaned.append((slope, offset, order, payload))
    # Steepest first: along a lower envelope the active slope only decreases.
    cleaned.sort(key=lambda item: (-item[0], item[1]))

    hull: list = []  # entries [slope, offset, payload, start_x]
    for slope, offset, _, payload in cleaned:
        while hull:
            top_slope, top_offset, _, top_start = (
                hull[-1][0], hull[-1][1], hull[-1][2], hull[-1][3]
            )
            # slope < top_slope, so this line wins for x beyond the crossing.
            cross = (offset - top_offset) / (top_slope - slope)
            if cross <= top_start:
                hull.pop()
                continue
            hull.append([slope, offset, payload, cross])
            break
        else:
            hull.append([slope, offset, payload, Fraction(0)])
    segments = []
    for idx, (_, _, payload, start) in enumerate(hull):
        end = hull[idx + 1][3] if idx + 1 < len(hull) else None
        segments.append((start, end, payload))
    return segments
