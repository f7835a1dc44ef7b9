"""GF(2) linear algebra, concrete storage codes, and their verifiers.

Matrices are bit-packed: each row is a Python int whose bit 0 is column 1.
That keeps rank/solve loops fast enough to check every recovery set and
repair round of the built-in and generated codes exhaustively.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .core import (
    CheckResult,
    CodeSpecError,
    ParameterRangeError,
    SystemParams,
    VerificationReport,
    make_report,
)


@dataclass(frozen=True)
class Gf2Matrix:
    """A rows x cols matrix over GF(2), one int bitmask per row."""

    rows: int
    cols: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ParameterRangeError("matrix dimensions must be nonnegative")
        if len(self.bits) != self.rows:
            raise ValueError(f"expected {self.rows} row masks, got {len(self.bits)}")
        limit = 1 << self.cols
        for mask in self.bits:
            if not 0 <= mask < limit:
                raise ValueError("row mask wider than the declared column count")

    @classmethod
    def from_rows(cls, masks: Iterable[int], cols: int) -> "Gf2Matrix":
        masks = tuple(masks)
        return cls(rows=len(masks), cols=cols, bits=masks)

    @classmethod
    def from_strings(cls, rows: Iterable[str]) -> "Gf2Matrix":
        """Rows as bitstrings whose leftmost character is column 1."""
        rows = tuple(rows)
        if not rows:
            return cls(0, 0, ())
        width = len(rows[0])
        masks = []
        for text in rows:
            if len(text) != width or set(text) - {"0", "1"}:
                raise ValueError(f"bad bitstring row {text!r}")
            mask = 0
            for pos, ch in enumerate(text):
                if ch == "1":
                    mask |= 1 << pos
            masks.append(mask)
        return cls(rows=len(rows), cols=width, bits=tuple(masks))

    def to_strings(self) -> tuple[str, ...]:
        return tuple(
            "".join("1" if mask >> pos & 1 else "0" for pos in range(self.cols))
            for mask in self.bits
        )

    @classmethod
    def identity(cls, size: int) -> "Gf2Matrix":
        return cls(size, size, tuple(1 << i for i in range(size)))

    def row(self, index: int) -> int:
        return self.bits[index]

    def entry(self, row: int, col: int) -> int:
        """Entry in 1-indexed (row, col) position."""
        return self.bits[row - 1] >> (col - 1) & 1

    def submatrix(self, row_range: range, col_range: range) -> "Gf2Matrix":
        """0-indexed half-open ranges."""
        masks = []
        for r in row_range:
            mask = 0
            for out_pos, c in enumerate(col_range):
                if self.bits[r] >> c & 1:
                    mask |= 1 << out_pos
            masks.append(mask)
        return Gf2Matrix(len(masks), len(col_range), tuple(masks))

    def column_block(self, start: int, width: int) -> "Gf2Matrix":
        """All rows restricted to ``width`` columns starting at 0-indexed ``start``."""
        shift = start
        keep = (1 << width) - 1
        return Gf2Matrix(
            self.rows, width, tuple(mask >> shift & keep for mask in self.bits)
        )

    def vstack(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.cols != other.cols:
            raise ValueError("column counts differ")
        return Gf2Matrix(self.rows + other.rows, self.cols, self.bits + other.bits)

    def transpose(self) -> "Gf2Matrix":
        masks = []
        for c in range(self.cols):
            mask = 0
            for r in range(self.rows):
                if self.bits[r] >> c & 1:
                    mask |= 1 << r
            masks.append(mask)
        return Gf2Matrix(self.cols, self.rows, tuple(masks))

    def matmul(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.cols != other.rows:
            raise ValueError(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        masks = []
        for mask in self.bits:
            acc = 0
            rest = mask
            while rest:
                low = rest & -rest
                acc ^= other.bits[low.bit_length() - 1]
                rest ^= low
            masks.append(acc)
        return Gf2Matrix(self.rows, other.cols, tuple(masks))

    def is_zero(self) -> bool:
        return all(mask == 0 for mask in self.bits)


def gf2_rank(matrix: Gf2Matrix) -> int:
    """Rank by elimination on the packed rows."""
    pivots: list[int] = []
    for mask in matrix.bits:
        for pivot in pivots:
            low = pivot & -pivot
            if mask & low:
                mask ^= pivot
        if mask:
            pivots.append(mask)
    # Reduce pivot rows against each other lazily; row count is the rank.
    return len(pivots)


def _elimination(matrix: Gf2Matrix) -> tuple[list[int], list[int], list[int]]:
    """Row-reduce, tracking combinations.

    Returns (reduced rows, their pivot columns, combination masks telling
    which original rows each reduced row sums).
    """
    reduced: list[int] = []
    pivot_cols: list[int] = []
    combos: list[int] = []
    for row_index, mask in enumerate(matrix.bits):
        combo = 1 << row_index
        for existing, existing_col, existing_combo in zip(reduced, pivot_cols, combos):
            if mask >> existing_col & 1:
                mask ^= existing
                combo ^= existing_combo
        if mask:
            col = (mask & -mask).bit_length() - 1
            reduced.append(mask)
            pivot_cols.append(col)
            combos.append(combo)
    return reduced, pivot_cols, combos


def gf2_solve(matrix: Gf2Matrix, target_rows: Gf2Matrix) -> Optional[Gf2Matrix]:
    """Express every target row as a combination of ``matrix`` rows.

    Returns X with X * matrix == target_rows, or None when some target row
    is outside the row space.
    """
    if matrix.cols != target_rows.cols:
        raise ValueError(
            f"column counts differ: {matrix.cols} vs {target_rows.cols}"
        )
    reduced, pivot_cols, combos = _elimination(matrix)
    solution = []
    for mask in target_rows.bits:
        combo = 0
        for existing, existing_col, existing_combo in zip(reduced, pivot_cols, combos):
            if mask >> existing_col & 1:
                mask ^= existing
                combo ^= existing_combo
        if mask:
            return None
        solution.append(combo)
    return Gf2Matrix(target_rows.rows, matrix.rows, tuple(solution))


def gf2_row_basis(matrix: Gf2Matrix) -> Gf2Matrix:
    """Independent subset of the rows, in reduced form, zero rows dropped."""
    reduced, _, _ = _elimination(matrix)
    return Gf2Matrix(len(reduced), matrix.cols, tuple(reduced))


def gf2_rref(matrix: Gf2Matrix) -> tuple[Gf2Matrix, tuple[int, ...]]:
    """Reduced row echelon form and its 0-indexed pivot columns.

    Pivot choice scans columns left to right, so the result is canonical.
    """
    rows = list(matrix.bits)
    pivot_cols: list[int] = []
    next_row = 0
    for col in range(matrix.cols):
        bit = 1 << col
        pivot = None
        for r in range(next_row, len(rows)):
            if rows[r] & bit:
                pivot = r
                break
        if pivot is None:
            continue
        rows[next_row], rows[pivot] = rows[pivot], rows[next_row]
        for r in range(len(rows)):
            if r != next_row and rows[r] & bit:
                rows[r] ^= rows[next_row]
        pivot_cols.append(col)
        next_row += 1
    return (
        Gf2Matrix(next_row, matrix.cols, tuple(rows[:next_row])),
        tuple(pivot_cols),
    )


def gf2_nullspace(matrix: Gf2Matrix) -> Gf2Matrix:
    """Canonical basis of {x : matrix * x^T == 0}, one row per free column."""
    rref, pivot_cols = gf2_rref(matrix)
    pivot_set = set(pivot_cols)
    free_cols = [c for c in range(matrix.cols) if c not in pivot_set]
    basis = []
    for free in free_cols:
        vector = 1 << free
        for row_mask, pivot in zip(rref.bits, pivot_cols):
            if row_mask >> free & 1:
                vector |= 1 << pivot
        basis.append(vector)
    return Gf2Matrix(len(basis), matrix.cols, tuple(basis))


# --- concrete codes ---------------------------------------------------------


@dataclass(frozen=True)
class RegeneratingCodeSpec:
    """A concrete exact-repair code over GF(2).

    ``generator`` maps the ``file_size`` message bits to ``node_count*alpha``
    stored bits; node i holds the alpha-bit column block i.  For each ordered
    pair (i, j), ``repair_maps[(i, j)]`` tells node i what to send (at most
    ``beta`` combinations of its stored bits) when node j is rebuilt.
    ``parity`` optionally records a check matrix whose null space contains
    the generator rows.
    """

    params: SystemParams
    file_size: int
    alpha: int
    beta: int
    generator: Gf2Matrix
    repair_maps: Mapping[tuple[int, int], Gf2Matrix]
    parity: Optional[Gf2Matrix] = None
    name: str = ""

    def __post_init__(self):
        n = self.params.node_count
        if self.generator.rows != self.file_size:
            raise CodeSpecError(
                f"generator has {self.generator.rows} rows, expected {self.file_size}"
            )
        if self.generator.cols != n * self.alpha:
            raise CodeSpecError(
                f"generator has {self.generator.cols} columns, expected {n * self.alpha}"
            )
        if gf2_rank(self.generator) != self.file_size:
            raise CodeSpecError("generator rows are not independent")
        if self.parity is not None and self.parity.cols != n * self.alpha:
            raise CodeSpecError("parity column count does not match the code length")

    def node_block(self, i: int) -> Gf2Matrix:
        """Node i's stored bits as row vectors over the message space."""
        block = self.generator.column_block((i - 1) * self.alpha, self.alpha)
        return block.transpose()


def _rotating_repair_maps(
    n: int, offset_maps: Mapping[int, Gf2Matrix]
) -> dict[tuple[int, int], Gf2Matrix]:
    """Repair maps that depend only on (i - j) mod n."""
    out = {}
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if i == j:
                continue
            out[(i, j)] = offset_maps[(i - j) % n]
    return out


def builtin_code_423() -> RegeneratingCodeSpec:
    """Four-node binary code storing a 4-bit file, 2 bits per node, repair
    bandwidth 1 bit per helper; any 2 nodes recover the file."""
    generator = Gf2Matrix.from_strings(
        [
            "10010100",  # x: stored plainly on node 1, mixed on nodes 2 and 3
            "00100101",  # y
            "01001001",  # z
            "01010010",  # t
        ]
    )
    offsets = {
        1: Gf2Matrix.from_strings(["10"]),
        2: Gf2Matrix.from_strings(["01"]),
        3: Gf2Matrix.from_strings(["11"]),
    }
    return RegeneratingCodeSpec(
        params=SystemParams(k=2, d=3),
        file_size=4,
        alpha=2,
        beta=1,
        generator=generator,
        repair_maps=_rotating_repair_maps(4, offsets),
        name="builtin-423",
    )


def builtin_code_433() -> RegeneratingCodeSpec:
    """Four-node binary code storing an 8-bit file, 3 bits per node, repair
    bandwidth 2 bits per helper; any 3 nodes recover the file.

    The parity attached is the congruence check matrix for d=3; every
    generator row lies in its null space.
    """
    generator = Gf2Matrix.from_strings(
        [
            "100000001000",  # x1
            "010001000000",  # x2
            "000100000001",  # y1
            "000010001000",  # y2
            "001000100000",  # z1
            "000000010001",  # z2
            "000001000100",  # t1
            "001000000010",  # t2
        ]
    )
    offsets = {
        1: Gf2Matrix.from_strings(["010", "001"]),
        2: Gf2Matrix.from_strings(["100", "001"]),
        3: Gf2Matrix.from_strings(["100", "010"]),
    }
    return RegeneratingCodeSpec(
        params=SystemParams(k=3, d=3),
        file_size=8,
        alpha=3,
        beta=2,
        generator=generator,
        repair_maps=_rotating_repair_maps(4, offsets),
        parity=congruence_check_matrix(3),
        name="builtin-433",
    )


def congruence_check_matrix(d: int) -> Gf2Matrix:
    """Square 0/1 matrix of size d(d+1) with a 1 exactly where the
    1-indexed row and column numbers agree modulo d+1."""
    if not isinstance(d, int) or d < 2:
        raise ParameterRangeError(f"need integer d >= 2, got {d!r}")
    size = d * (d + 1)
    modulus = d + 1
    masks = []
    for r in range(1, size + 1):
        mask = 0
        for c in range(1, size + 1):
            if (r - c) % modulus == 0:
                mask |= 1 << (c - 1)
        masks.append(mask)
    return Gf2Matrix(size, size, tuple(masks))


def build_congruence_family(d: int) -> RegeneratingCodeSpec:
    """Code on d+1 nodes cut out by the congruence check matrix.

    Stores (d-1)(d+1) file bits with alpha=d bits per node and beta=d-1
    bits per helper; any d nodes recover the file.  The generator is the
    canonical reduced null-space basis of the check matrix, and each repair
    map is the reduced block of the check matrix linking helper to target.
    """
    if not isinstance(d, int) or d < 3:
        raise ParameterRangeError(f"need integer d >= 3, got {d!r}")
    parity = congruence_check_matrix(d)
    generator = gf2_nullspace(parity)
    n = d + 1
    alpha = d
    repair_maps = {}
    for j in range(1, n + 1):
        row_range = range((j - 1) * alpha, j * alpha)
        for i in range(1, n + 1):
            if i == j:
                continue
            block = parity.submatrix(row_range, range((i - 1) * alpha, i * alpha))
            repair_maps[(i, j)] = gf2_row_basis(block)
    return RegeneratingCodeSpec(
        params=SystemParams(k=d, d=d),
        file_size=(d - 1) * (d + 1),
        alpha=alpha,
        beta=d - 1,
        generator=generator,
        repair_maps=repair_maps,
        parity=parity,
        name=f"congruence-d{d}",
    )


# --- verifiers --------------------------------------------------------------


def verify_recovery(spec: RegeneratingCodeSpec) -> VerificationReport:
    """Every choice of k node blocks must span the full message space."""
    n = spec.params.node_count
    k = spec.params.k
    checks = []
    for subset in itertools.combinations(range(1, n + 1), k):
        width = k * spec.alpha
        stacked_cols = []
        for i in subset:
            start = (i - 1) * spec.alpha
            stacked_cols.append(spec.generator.column_block(start, spec.alpha))
        combined = Gf2Matrix(
            spec.file_size,
            width,
            tuple(
                _concat_masks(
                    [block.bits[r] for block in stacked_cols], spec.alpha
                )
                for r in range(spec.file_size)
            ),
        )
        rank = gf2_rank(combined)
        ok = rank == spec.file_size
        checks.append(
            CheckResult(
                name=f"recovery{list(subset)}",
                ok=ok,
                detail="" if ok else
                f"nodes {list(subset)} span rank {rank}, need {spec.file_size}",
            )
        )
        if not ok:
            break
    return make_report(checks)


def _concat_masks(masks: list[int], width: int) -> int:
    out = 0
    for pos, mask in enumerate(masks):
        out |= mask << (pos * width)
    return out


def verify_repair(spec: RegeneratingCodeSpec) -> VerificationReport:
    """Rebuilding any node from the other d must reproduce its content.

    Each helper may contribute at most beta combinations of its own bits;
    the stacked contributions must span the lost node's block.
    """
    n = spec.params.node_count
    d = spec.params.d
    checks = []
    for j in range(1, n + 1):
        helpers = [i for i in range(1, n + 1) if i != j]
        for helper_set in itertools.combinations(helpers, d):
            sent_rows: Optional[Gf2Matrix] = None
            size_ok = True
            for i in helper_set:
                mapping = spec.repair_maps.get((i, j))
                if mapping is None:
                    raise CodeSpecError(f"missing repair map for ({i}, {j})")
                if mapping.cols != spec.alpha:
                    raise CodeSpecError(
                        f"repair map ({i}, {j}) has {mapping.cols} columns, "
                        f"expected alpha={spec.alpha}"
                    )
                if mapping.rows > spec.beta:
                    checks.append(
                        CheckResult(
                            name=f"repair{j}<-{list(helper_set)}",
                            ok=False,
                            detail=f"map ({i}, {j}) sends {mapping.rows} rows, "
                            f"budget beta={spec.beta}",
                        )
                    )
                    size_ok = False
                    break
                contribution = mapping.matmul(spec.node_block(i))
                sent_rows = (
                    contribution if sent_rows is None
                    else sent_rows.vstack(contribution)
                )
            if not size_ok:
                return make_report(checks)
            assert sent_rows is not None
            solved = gf2_solve(sent_rows, spec.node_block(j))
            ok = solved is not None
            checks.append(
                CheckResult(
                    name=f"repair{j}<-{list(helper_set)}",
                    ok=ok,
                    detail="" if ok else
                    f"helpers {list(helper_set)} cannot rebuild node {j}",
                )
            )
            if not ok:
                return make_report(checks)
    return make_report(checks)


def verify_parity_structure(spec: RegeneratingCodeSpec) -> VerificationReport:
    """Structural checks linking the parity matrix to the code shape."""
    if spec.parity is None:
        raise CodeSpecError("no parity matrix attached to this code spec")
    parity = spec.parity
    n = spec.params.node_count
    checks = []

    product = spec.generator.matmul(parity.transpose())
    checks.append(
        CheckResult(
            name="generator-in-nullspace",
            ok=product.is_zero(),
            detail="" if product.is_zero() else "generator * parity^T != 0",
        )
    )

    expected_rank = n * spec.alpha - spec.file_size
    rank = gf2_rank(parity)
    checks.append(
        CheckResult(
            name="parity-rank",
            ok=rank == expected_rank,
            detail="" if rank == expected_rank else
            f"parity rank {rank}, expected {expected_rank}",
        )
    )

    for i in range(1, n + 1):
        cols = range((i - 1) * spec.alpha, i * spec.alpha)
        diag = parity.submatrix(range((i - 1) * spec.alpha, i * spec.alpha), cols)
        diag_rank = gf2_rank(diag)
        checks.append(
            CheckResult(
                name=f"diag-block-{i}",
                ok=diag_rank == spec.alpha,
                detail="" if diag_rank == spec.alpha else
                f"diagonal block {i} has rank {diag_rank}, expected {spec.alpha}",
            )
        )
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            block = parity.submatrix(
                range((i - 1) * spec.alpha, i * spec.alpha),
                range((j - 1) * spec.alpha, j * spec.alpha),
            )
            block_rank = gf2_rank(block)
            if block_rank > spec.beta:
                checks.append(
                    CheckResult(
                        name=f"offdiag-block-{i}-{j}",
                        ok=False,
                        detail=f"off-diagonal block ({i},{j}) has rank "
                        f"{block_rank} > beta={spec.beta}",
                    )
                )
    if all(c.ok for c in checks):
        checks.append(CheckResult(name="offdiag-blocks", ok=True))
    return make_report(checks)
