"""Exact sparse linear algebra over the integers.

Everything here works with arbitrary-precision Python ints: Smith normal
form over Z is prone to coefficient explosion, and silent fixed-width
overflow would corrupt every homology group computed downstream.

The main entry points are

* :class:`SparseIntMatrix` -- immutable sparse matrix,
* :func:`snf` -- Smith normal form (invariant factors, optional unimodular
  transforms),
* :func:`homology_at` -- homology ker/im of a composable pair of boundary
  maps, as a :class:`FgAbGroup`,
* :func:`subquotient` -- quotient of one integer lattice by another,
* :class:`ColumnEchelon` -- incremental integer column echelon form used
  for kernels, membership tests and exact linear solves.

All values are immutable after construction and safe to share between
workers; computations are single-threaded and bit-identical across runs.
"""

from __future__ import annotations

import heapq
from math import gcd, prod
from typing import Iterable, Mapping, Sequence


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) = x*a + y*b and g >= 0."""
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        g, x, y = -g, -x, -y
    return g, x, y


class PreconditionError(ValueError):
    """A caller violated a documented precondition."""


class BudgetExceeded(RuntimeError):
    """A computation would exceed the configured size budget.

    ``required`` carries the size that would have been needed so callers
    can report honest SKIPPED entries.
    """

    def __init__(self, message: str, required: int, budget: int):
        super().__init__(f"{message} (required {required}, budget {budget})")
        self.message = message
        self.required = required
        self.budget = budget


class SparseIntMatrix:
    """Immutable sparse integer matrix.

    Entries are stored as a dict (row, col) -> nonzero int.  Zero entries
    are never stored; indices are validated at construction.
    """

    __slots__ = ("rows", "cols", "entries", "_cols_cache", "_hash")

    def __init__(self, rows: int, cols: int, entries: Mapping[tuple[int, int], int]):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimensions")
        store: dict[tuple[int, int], int] = {}
        for (r, c), v in entries.items():
            if v == 0:
                continue
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"entry ({r},{c}) out of bounds for {rows}x{cols}")
            store[(r, c)] = int(v)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", store)
        object.__setattr__(self, "_cols_cache", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("SparseIntMatrix is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseIntMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "SparseIntMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def from_dense(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "SparseIntMatrix":
        rows = len(data)
        if cols is None:
            cols = len(data[0]) if rows else 0
        entries = {}
        for r, row in enumerate(data):
            if len(row) != cols:
                raise ValueError("ragged dense data")
            for c, v in enumerate(row):
                if v:
                    entries[(r, c)] = int(v)
        return cls(rows, cols, entries)

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[Mapping[int, int]]) -> "SparseIntMatrix":
        entries = {}
        for c, col in enumerate(columns):
            for r, v in col.items():
                if v:
                    entries[(r, c)] = int(v)
        return cls(rows, len(columns), entries)

    # -- accessors ----------------------------------------------------

    def entry(self, r: int, c: int) -> int:
        return self.entries.get((r, c), 0)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_dense(self) -> list[list[int]]:
        data = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            data[r][c] = v
        return data

    def columns(self) -> list[dict[int, int]]:
        """Column-major view (cached); each column is a dict row -> value."""
        cached = self._cols_cache
        if cached is None:
            cached = [dict() for _ in range(self.cols)]
            for (r, c), v in self.entries.items():
                cached[c][r] = v
            object.__setattr__(self, "_cols_cache", cached)
        return cached

    def column(self, c: int) -> dict[int, int]:
        return dict(self.columns()[c])

    def transpose(self) -> "SparseIntMatrix":
        return SparseIntMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()})

    def submatrix_columns(self, col_indices: Sequence[int]) -> "SparseIntMatrix":
        cols = self.columns()
        return SparseIntMatrix.from_columns(self.rows, [cols[j] for j in col_indices])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseIntMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.entries) == (other.rows, other.cols, other.entries)

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.rows, self.cols, tuple(sorted(self.entries.items()))))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self) -> str:
        return f"SparseIntMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    # -- arithmetic (small-matrix utilities) ---------------------------

    def __matmul__(self, other: "SparseIntMatrix") -> "SparseIntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in product")
        result: dict[tuple[int, int], int] = {}
        other_rows: dict[int, list[tuple[int, int]]] = {}
        for (r, c), v in other.entries.items():
            other_rows.setdefault(r, []).append((c, v))
        for (r, k), v in self.entries.items():
            for c, w in other_rows.get(k, ()):
                key = (r, c)
                nv = result.get(key, 0) + v * w
                if nv:
                    result[key] = nv
                elif key in result:
                    del result[key]
        return SparseIntMatrix(self.rows, other.cols, result)

    def __add__(self, other: "SparseIntMatrix") -> "SparseIntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in sum")
        result = dict(self.entries)
        for key, v in other.entries.items():
            nv = result.get(key, 0) + v
            if nv:
                result[key] = nv
            elif key in result:
                del result[key]
        return SparseIntMatrix(self.rows, self.cols, result)

    def __neg__(self) -> "SparseIntMatrix":
        return SparseIntMatrix(self.rows, self.cols, {k: -v for k, v in self.entries.items()})

    def scale(self, a: int) -> "SparseIntMatrix":
        if a == 0:
            return SparseIntMatrix.zero(self.rows, self.cols)
        return SparseIntMatrix(self.rows, self.cols, {k: a * v for k, v in self.entries.items()})

    def apply(self, vec: Mapping[int, int]) -> dict[int, int]:
        """Matrix times sparse column vector."""
        out: dict[int, int] = {}
        cols = self.columns()
        for c, x in vec.items():
            if not x:
                continue
            for r, v in cols[c].items():
                nv = out.get(r, 0) + v * x
                if nv:
                    out[r] = nv
                elif r in out:
                    del out[r]
        return out

    def stack_columns(self, other: "SparseIntMatrix") -> "SparseIntMatrix":
        """[self | other] with the same row space."""
        if self.rows != other.rows:
            raise ValueError("row mismatch in column stack")
        entries = dict(self.entries)
        for (r, c), v in other.entries.items():
            entries[(r, c + self.cols)] = v
        return SparseIntMatrix(self.rows, self.cols + other.cols, entries)

    def is_zero(self) -> bool:
        return not self.entries

    # -- serialization -------------------------------------------------

    def to_text(self) -> str:
        """Plain-text coordinate format: header `rows cols nnz`, then
        one `row col value` triple per line sorted by (row, col)."""
        lines = [f"{self.rows} {self.cols} {self.nnz}"]
        for (r, c), v in sorted(self.entries.items()):
            lines.append(f"{r} {c} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseIntMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        rows, cols, nnz = (int(t) for t in lines[0].split())
        if len(lines) - 1 != nnz:
            raise ValueError(f"expected {nnz} triples, found {len(lines) - 1}")
        entries = {}
        for ln in lines[1:]:
            r, c, v = ln.split()
            entries[(int(r), int(c))] = int(v)
        return cls(rows, cols, entries)


class FgAbGroup:
    """Finitely generated abelian group Z^free_rank + sum of Z/d_i.

    The torsion invariant factors are >= 2 and form a divisibility chain
    d_1 | d_2 | ... | d_k.
    """

    __slots__ = ("free_rank", "torsion")

    def __init__(self, free_rank: int = 0, torsion: Iterable[int] = ()):
        tor = tuple(int(d) for d in torsion)
        if free_rank < 0:
            raise ValueError("negative free rank")
        for d in tor:
            if d < 2:
                raise ValueError(f"torsion factor {d} < 2")
        for a, b in zip(tor, tor[1:]):
            if b % a:
                raise ValueError(f"torsion factors {tor} violate divisibility chain")
        object.__setattr__(self, "free_rank", free_rank)
        object.__setattr__(self, "torsion", tor)

    def __setattr__(self, name, value):
        raise AttributeError("FgAbGroup is immutable")

    @classmethod
    def free(cls, rank: int) -> "FgAbGroup":
        return cls(rank, ())

    @classmethod
    def zero(cls) -> "FgAbGroup":
        return cls(0, ())

    @classmethod
    def cyclic(cls, n: int) -> "FgAbGroup":
        if n == 0:
            return cls(1, ())
        if n == 1:
            return cls(0, ())
        return cls(0, (n,))

    @classmethod
    def from_factors(cls, free_rank: int, factors: Iterable[int]) -> "FgAbGroup":
        """Build from an arbitrary multiset of cyclic orders (0 means Z)."""
        free = free_rank
        tor = []
        for d in factors:
            d = abs(int(d))
            if d == 0:
                free += 1
            elif d > 1:
                tor.append(d)
        return cls(free, invariant_factor_chain(tor))

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def torsion_order(self) -> int:
        return prod(self.torsion) if self.torsion else 1

    def direct_sum(self, *others: "FgAbGroup") -> "FgAbGroup":
        free = self.free_rank + sum(o.free_rank for o in others)
        tor = list(self.torsion)
        for o in others:
            tor.extend(o.torsion)
        return FgAbGroup(free, invariant_factor_chain(tor))

    def tensor_with_free(self, rank: int) -> "FgAbGroup":
        """Tensor with Z^rank (coefficient factorization for free modules)."""
        return FgAbGroup(self.free_rank * rank, invariant_factor_chain(list(self.torsion) * rank))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FgAbGroup):
            return NotImplemented
        return self.free_rank == other.free_rank and self.torsion == other.torsion

    def __hash__(self) -> int:
        return hash((self.free_rank, self.torsion))

    def __repr__(self) -> str:
        return f"FgAbGroup({self.free_rank}, {self.torsion})"

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"


def invariant_factor_chain(values: Iterable[int]) -> tuple[int, ...]:
    """Normalize a multiset of cyclic orders into a divisibility chain.

    diag(a, b) is equivalent to diag(gcd(a,b), lcm(a,b)); iterating the
    pairwise rewrite on the sorted multiset terminates (each firing
    strictly shrinks one element) and sorts the prime-power content into
    invariant factors.
    """
    vals = sorted(abs(int(v)) for v in values if abs(int(v)) > 1)
    changed = True
    while changed:
        changed = False
        vals.sort()
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                a, b = vals[i], vals[j]
                if b % a:
                    g = gcd(a, b)
                    vals[i], vals[j] = g, a // g * b
                    changed = True
        if changed:
            vals = [v for v in vals if v > 1]
    return tuple(sorted(vals))


class SmithForm:
    """Result of a Smith normal form computation.

    diag holds the positive invariant factors d_1 | d_2 | ... | d_r.
    When transforms were requested, left/right are unimodular with
    left @ original @ right == diagonal form, and left_inv/right_inv are
    their exact inverses.
    """

    __slots__ = ("diag", "rank", "left", "right", "left_inv", "right_inv", "shape")

    def __init__(self, diag, rank, shape, left=None, right=None, left_inv=None, right_inv=None):
        object.__setattr__(self, "diag", tuple(diag))
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "left_inv", left_inv)
        object.__setattr__(self, "right_inv", right_inv)

    def __setattr__(self, name, value):
        raise AttributeError("SmithForm is immutable")

    def diagonal_matrix(self) -> SparseIntMatrix:
        rows, cols = self.shape
        return SparseIntMatrix(rows, cols, {(i, i): d for i, d in enumerate(self.diag)})

    def __repr__(self) -> str:
        return f"SmithForm(rank={self.rank}, diag={self.diag})"


# ---------------------------------------------------------------------------
# Streaming sparse elimination (invariant factors, no transforms)
# ---------------------------------------------------------------------------


class SparseEliminator:
    """Invariant factors of a wide sparse integer matrix by Schur elimination.

    Columns are fed one at a time, so the matrix never needs to exist as
    a single object.  Pivots are chosen by minimal absolute value first,
    then a Markowitz fill estimate (row weight - 1) * (col weight - 1),
    with deterministic (row, col) tie-breaking.  Candidate keys live in a
    lazy heap holding one candidate per row: stale keys are re-validated
    at pop time, so selection is deterministic but may lag the literal
    global optimum while weights shift.  Unit pivots clear their row by
    column operations and their column for free afterwards.
    """

    def __init__(self, nrows: int):
        self.nrows = nrows
        self.cols: dict[int, dict[int, int]] = {}
        self.row_cols: dict[int, set[int]] = {}
        self.ncols = 0
        self.pivots: list[int] = []

    def add_column(self, col: Mapping[int, int]) -> None:
        c = self.ncols
        self.ncols += 1
        stored = {r: v for r, v in col.items() if v}
        if not stored:
            return
        for r in stored:
            if not 0 <= r < self.nrows:
                raise ValueError(f"row index {r} out of range")
            self.row_cols.setdefault(r, set()).add(c)
        self.cols[c] = stored

    def add_columns(self, columns: Iterable[Mapping[int, int]]) -> None:
        for col in columns:
            self.add_column(col)

    # -- pivot selection ----------------------------------------------

    def _row_best(self, r: int) -> tuple[int, int, int, int] | None:
        """Best candidate (|v|, markowitz, r, c) within row r."""
        cols_here = self.row_cols.get(r)
        if not cols_here:
            return None
        rw = len(cols_here) - 1
        best = None
        for c in cols_here:
            col = self.cols[c]
            key = (abs(col[r]), rw * (len(col) - 1), r, c)
            if best is None or key < best:
                best = key
        return best

    # -- elementary operations ----------------------------------------

    def _col_gcd_combine(self, c1: int, c2: int, r: int) -> None:
        """Unimodular combine of columns c1, c2 making entry (r, c2) zero
        and (r, c1) the gcd."""
        colA, colB = self.cols[c1], self.cols[c2]
        a, b = colA[r], colB[r]
        g, x, y = xgcd(a, b)
        u, w = a // g, b // g
        newA: dict[int, int] = {}
        newB: dict[int, int] = {}
        for rr in set(colA) | set(colB):
            av, bv = colA.get(rr, 0), colB.get(rr, 0)
            nv = x * av + y * bv
            mv = -w * av + u * bv
            if nv:
                newA[rr] = nv
            if mv:
                newB[rr] = mv
        self._replace_column(c1, newA)
        self._replace_column(c2, newB)

    def _row_gcd_combine(self, r1: int, r2: int, c: int) -> None:
        """Unimodular combine of rows r1, r2 making entry (r2, c) zero
        and (r1, c) the gcd."""
        col = self.cols[c]
        a, b = col[r1], col[r2]
        g, x, y = xgcd(a, b)
        u, w = a // g, b // g
        for cc in list(self.row_cols.get(r1, set()) | self.row_cols.get(r2, set())):
            colC = self.cols[cc]
            av, bv = colC.get(r1, 0), colC.get(r2, 0)
            for rr, val in ((r1, x * av + y * bv), (r2, -w * av + u * bv)):
                if val:
                    if rr not in colC:
                        self.row_cols.setdefault(rr, set()).add(cc)
                    colC[rr] = val
                elif rr in colC:
                    del colC[rr]
                    self.row_cols[rr].discard(cc)
            if not colC:
                del self.cols[cc]

    def _replace_column(self, c: int, new_col: dict[int, int]) -> None:
        old = self.cols.get(c, {})
        for rr in old:
            if rr not in new_col:
                self.row_cols[rr].discard(c)
        for rr in new_col:
            if rr not in old:
                self.row_cols.setdefault(rr, set()).add(c)
        if new_col:
            self.cols[c] = new_col
        elif c in self.cols:
            del self.cols[c]

    def _eliminate(self, r: int, c: int) -> set[int]:
        """Clear row r and column c with unimodular operations, record the
        pivot, and return the set of other rows whose weights changed."""
        cols, row_cols = self.cols, self.row_cols
        # Improve the pivot until it divides its whole row and column.
        while True:
            col = cols[c]
            pv = col[r]
            bad_col = next((c2 for c2 in row_cols[r] if c2 != c and cols[c2][r] % pv), None)
            if bad_col is not None:
                self._col_gcd_combine(c, bad_col, r)
                continue
            bad_row = next((rr for rr in col if rr != r and col[rr] % pv), None)
            if bad_row is not None:
                self._row_gcd_combine(r, bad_row, c)
                continue
            break
        col = cols[c]
        pv = col[r]
        touched = set(col) - {r}
        # Clear row r by column operations; fill comes from the pivot column.
        pivot_entries = [(rr, vv) for rr, vv in col.items() if rr != r]
        for c2 in list(row_cols[r]):
            if c2 == c:
                continue
            colD = cols[c2]
            q = colD[r] // pv
            del colD[r]
            row_cols[r].discard(c2)
            if q:
                for rr, vv in pivot_entries:
                    nv = colD.get(rr, 0) - q * vv
                    if nv:
                        if rr not in colD:
                            row_cols.setdefault(rr, set()).add(c2)
                        colD[rr] = nv
                    elif rr in colD:
                        del colD[rr]
                        row_cols[rr].discard(c2)
                    touched.add(rr)
            if not colD:
                del cols[c2]
        # Column c now dies by row operations against the cleared row r,
        # which cannot touch any other column (row r has single support).
        for rr, _ in pivot_entries:
            row_cols[rr].discard(c)
        del cols[c]
        row_cols.pop(r, None)
        self.pivots.append(abs(pv))
        return touched

    def run(self) -> tuple[int, tuple[int, ...]]:
        """Eliminate everything; return (rank, invariant factor chain)."""
        heap: list[tuple[int, int, int, int]] = []
        for r in sorted(self.row_cols):
            cand = self._row_best(r)
            if cand:
                heap.append(cand)
        heapq.heapify(heap)
        while heap:
            key = heapq.heappop(heap)
            r = key[2]
            cand = self._row_best(r)
            if cand is None:
                continue
            if cand > key:
                heapq.heappush(heap, cand)
                continue
            _, _, r, c = cand
            touched = self._eliminate(r, c)
            for rr in touched:
                nxt = self._row_best(rr)
                if nxt:
                    heapq.heappush(heap, nxt)
        assert not self.cols and not any(self.row_cols.values())
        nontrivial = invariant_factor_chain(self.pivots)
        diag = (1,) * (len(self.pivots) - len(nontrivial)) + nontrivial
        return len(self.pivots), diag


def rank_and_factors(m: SparseIntMatrix) -> tuple[int, tuple[int, ...]]:
    """Rank and invariant-factor chain of m (no transforms)."""
    elim = SparseEliminator(m.rows)
    elim.add_columns(m.columns())
    return elim.run()


def rank_and_factors_stream(nrows: int, columns: Iterable[Mapping[int, int]]) -> tuple[int, tuple[int, ...]]:
    """Streaming variant of :func:`rank_and_factors` for matrices too wide
    to materialize; consumes the column iterable once."""
    elim = SparseEliminator(nrows)
    elim.add_columns(columns)
    return elim.run()


def matrix_rank(m: SparseIntMatrix) -> int:
    return rank_and_factors(m)[0]


# ---------------------------------------------------------------------------
# Smith normal form with transforms
# ---------------------------------------------------------------------------


def snf(m: SparseIntMatrix, transforms: bool = False) -> SmithForm:
    """Smith normal form of m.

    Without transforms this delegates to the streaming eliminator, which
    only tracks invariant factors (much cheaper).  With transforms the
    elimination additionally maintains left/right unimodular matrices and
    their inverses such that left @ m @ right equals the diagonal form.
    Output is deterministic for identical input.
    """
    if not transforms:
        rank, diag = rank_and_factors(m)
        return SmithForm(diag, rank, (m.rows, m.cols))
    return _snf_with_transforms(m)


class _TransformTracker:
    """Unimodular transform journal.

    Maintains L (row-major), the transpose of L^-1 (row-major), R
    (column-major) and R^-1 (row-major) so that L @ A_orig @ R equals the
    current working matrix at all times.
    """

    def __init__(self, nrows: int, ncols: int):
        self.L = {i: {i: 1} for i in range(nrows)}
        self.LinvT = {i: {i: 1} for i in range(nrows)}   # row i = column i of L^-1
        self.R = {j: {j: 1} for j in range(ncols)}       # R[j] = column j
        self.Rinv = {j: {j: 1} for j in range(ncols)}    # row-major

    def row_combine(self, i: int, j: int, a: int, b: int, c: int, d: int):
        """Rows (i, j) <- (a*row_i + b*row_j, c*row_i + d*row_j), ad-bc = +-1."""
        det = a * d - b * c
        Li, Lj = self.L[i], self.L[j]
        self.L[i] = _combine(Li, Lj, a, b)
        self.L[j] = _combine(Li, Lj, c, d)
        # L^-1 gains E^-1 on the right; on LinvT that is a row operation
        # with the transposed inverse block ((d,-c),(-b,a))*det.
        Ti, Tj = self.LinvT[i], self.LinvT[j]
        self.LinvT[i] = _combine(Ti, Tj, d * det, -c * det)
        self.LinvT[j] = _combine(Ti, Tj, -b * det, a * det)

    def col_combine(self, i: int, j: int, a: int, b: int, c: int, d: int):
        """Cols (i, j) <- (a*col_i + b*col_j, c*col_i + d*col_j), ad-bc = +-1."""
        det = a * d - b * c
        Ri, Rj = self.R[i], self.R[j]
        self.R[i] = _combine(Ri, Rj, a, b)
        self.R[j] = _combine(Ri, Rj, c, d)
        # R^-1 gains F^-1 on the left; rows (i, j) of Rinv combine with
        # the inverse block of F = [[a, c], [b, d]] (column-op matrix).
        det_f = a * d - b * c
        Pi, Pj = self.Rinv[i], self.Rinv[j]
        self.Rinv[i] = _combine(Pi, Pj, d * det_f, -c * det_f)
        self.Rinv[j] = _combine(Pi, Pj, -b * det_f, a * det_f)

    def row_negate(self, i: int):
        self.L[i] = {k: -v for k, v in self.L[i].items()}
        self.LinvT[i] = {k: -v for k, v in self.LinvT[i].items()}


def _combine(u: dict, v: dict, a: int, b: int) -> dict:
    out: dict[int, int] = {}
    if a:
        for k, x in u.items():
            out[k] = a * x
    if b:
        for k, x in v.items():
            nv = out.get(k, 0) + b * x
            if nv:
                out[k] = nv
            elif k in out:
                del out[k]
    return out


def _snf_with_transforms(m: SparseIntMatrix) -> SmithForm:
    nrows, ncols = m.rows, m.cols
    cols = {c: dict(col) for c, col in enumerate(m.columns()) if col}
    row_cols: dict[int, set[int]] = {}
    for c, col in cols.items():
        for r in col:
            row_cols.setdefault(r, set()).add(c)
    tr = _TransformTracker(nrows, ncols)

    def col_addmul(dst: int, src: int, q: int):
        # col dst -= q * col src
        if not q:
            return
        colS = cols.get(src, {})
        colD = cols.setdefault(dst, {})
        for rr, vv in colS.items():
            nv = colD.get(rr, 0) - q * vv
            if nv:
                if rr not in colD:
                    row_cols.setdefault(rr, set()).add(dst)
                colD[rr] = nv
            elif rr in colD:
                del colD[rr]
                row_cols[rr].discard(dst)
        if not colD:
            cols.pop(dst, None)
        tr.col_combine(src, dst, 1, 0, -q, 1)

    def row_addmul(dst: int, src: int, q: int):
        # row dst -= q * row src
        if not q:
            return
        for c in list(row_cols.get(src, ())):
            col = cols[c]
            nv = col.get(dst, 0) - q * col[src]
            if nv:
                if dst not in col:
                    row_cols.setdefault(dst, set()).add(c)
                col[dst] = nv
            elif dst in col:
                del col[dst]
                row_cols[dst].discard(c)
            if not col:
                del cols[c]
        tr.row_combine(src, dst, 1, 0, -q, 1)

    def col_gcd_combine(c1: int, c2: int, r: int):
        colA, colB = cols[c1], cols.get(c2, {})
        a, b = colA[r], colB[r]
        g, x, y = xgcd(a, b)
        u, w = a // g, b // g
        newA, newB = {}, {}
        for rr in set(colA) | set(colB):
            av, bv = colA.get(rr, 0), colB.get(rr, 0)
            nv, mv = x * av + y * bv, -w * av + u * bv
            if nv:
                newA[rr] = nv
            if mv:
                newB[rr] = mv
        for c, old, new in ((c1, colA, newA), (c2, colB, newB)):
            for rr in old:
                if rr not in new:
                    row_cols[rr].discard(c)
            for rr in new:
                if rr not in old:
                    row_cols.setdefault(rr, set()).add(c)
            if new:
                cols[c] = new
            else:
                cols.pop(c, None)
        tr.col_combine(c1, c2, x, y, -w, u)

    def row_gcd_combine(r1: int, r2: int, c: int):
        col = cols[c]
        a, b = col[r1], col[r2]
        g, x, y = xgcd(a, b)
        u, w = a // g, b // g
        for cc in list(row_cols.get(r1, set()) | row_cols.get(r2, set())):
            colC = cols[cc]
            av, bv = colC.get(r1, 0), colC.get(r2, 0)
            for rr, val in ((r1, x * av + y * bv), (r2, -w * av + u * bv)):
                if val:
                    if rr not in colC:
                        row_cols.setdefault(rr, set()).add(cc)
                    colC[rr] = val
                elif rr in colC:
                    del colC[rr]
                    row_cols[rr].discard(cc)
            if not colC:
                del cols[cc]
        tr.row_combine(r1, r2, x, y, -w, u)

    pivots: list[tuple[int, int, int]] = []  # (row, col, positive value)
    while cols:
        best = None
        for c, col in cols.items():
            cw = len(col) - 1
            for r, v in col.items():
                key = (abs(v), (len(row_cols[r]) - 1) * cw, r, c)
                if best is None or key < best:
                    best = key
        _, _, r, c = best
        while True:
            pv = cols[c][r]
            bad_col = next((c2 for c2 in row_cols[r] if c2 != c and cols[c2][r] % pv), None)
            if bad_col is not None:
                col_gcd_combine(c, bad_col, r)
                continue
            bad_row = next((r2 for r2 in cols[c] if r2 != r and cols[c][r2] % pv), None)
            if bad_row is not None:
                row_gcd_combine(r, bad_row, c)
                continue
            break
        pv = cols[c][r]
        for c2 in list(row_cols[r]):
            if c2 != c:
                col_addmul(c2, c, cols[c2][r] // pv)
        for r2 in list(cols[c]):
            if r2 != r:
                row_addmul(r2, r, cols[c][r2] // pv)
        assert cols[c] == {r: pv}
        if pv < 0:
            tr.row_negate(r)
            pv = -pv
        del cols[c]
        row_cols[r].discard(c)
        if not row_cols[r]:
            del row_cols[r]
        pivots.append((r, c, pv))

    # Permute pivots onto the leading diagonal.
    perm_row = {r: i for i, (r, _, _) in enumerate(pivots)}
    perm_col = {c: i for i, (_, c, _) in enumerate(pivots)}
    nxt = len(pivots)
    for r in range(nrows):
        if r not in perm_row:
            perm_row[r] = nxt
            nxt += 1
    nxt = len(pivots)
    for c in range(ncols):
        if c not in perm_col:
            perm_col[c] = nxt
            nxt += 1
    L = SparseIntMatrix(nrows, nrows,
                        {(perm_row[i], k): v for i, row in tr.L.items() for k, v in row.items()})
    Linv = SparseIntMatrix(nrows, nrows,
                           {(k, perm_row[i]): v for i, row in tr.LinvT.items() for k, v in row.items()})
    R = SparseIntMatrix(ncols, ncols,
                        {(k, perm_col[j]): v for j, colv in tr.R.items() for k, v in colv.items()})
    Rinv = SparseIntMatrix(ncols, ncols,
                           {(perm_col[j], k): v for j, rowv in tr.Rinv.items() for k, v in rowv.items()})
    diag = [v for (_, _, v) in pivots]

    # Sort the diagonal ascending (permutation fix keeps transforms exact).
    order = sorted(range(len(diag)), key=lambda i: (diag[i], i))
    if order != list(range(len(diag))):
        perm = {old: new for new, old in enumerate(order)}
        P = SparseIntMatrix(nrows, nrows,
                            {(perm.get(i, i), i): 1 for i in range(nrows)})
        Q = SparseIntMatrix(ncols, ncols,
                            {(j, perm.get(j, j)): 1 for j in range(ncols)})
        L, Linv, R, Rinv = P @ L, Linv @ P.transpose(), R @ Q, Q.transpose() @ Rinv
        diag = [diag[i] for i in order]

    # Enforce the divisibility chain with explicit 2x2 unimodular fixes.
    changed = True
    while changed:
        changed = False
        for i in range(len(diag)):
            for j in range(i + 1, len(diag)):
                a, b = diag[i], diag[j]
                if b % a == 0:
                    continue
                changed = True
                g, x, y = xgcd(a, b)
                bg, ag = b // g, a // g
                l = ag * b
                L2 = ((x, y), (-bg, ag))
                R2 = ((1, -y * bg), (1, x * ag))
                m00 = L2[0][0] * a * R2[0][0] + L2[0][1] * b * R2[1][0]
                m01 = L2[0][0] * a * R2[0][1] + L2[0][1] * b * R2[1][1]
                m10 = L2[1][0] * a * R2[0][0] + L2[1][1] * b * R2[1][0]
                m11 = L2[1][0] * a * R2[0][1] + L2[1][1] * b * R2[1][1]
                assert (m00, m01, m10, m11) == (g, 0, 0, l), "chain fix arithmetic"
                L = _apply_two_by_two_rows(L, i, j, L2)
                Linv = _apply_two_by_two_cols(Linv, i, j, _inv2(L2))
                R = _apply_two_by_two_cols(R, i, j, R2)
                Rinv = _apply_two_by_two_rows(Rinv, i, j, _inv2(R2))
                diag[i], diag[j] = g, l
    return SmithForm(diag, len(diag), (nrows, ncols), L, R, Linv, Rinv)


def _inv2(M):
    (a, b), (c, d) = M
    det = a * d - b * c
    return ((d * det, -b * det), (-c * det, a * det))


def _apply_two_by_two_rows(m: SparseIntMatrix, i: int, j: int, T) -> SparseIntMatrix:
    """rows (i, j) <- (a*row_i + b*row_j, c*row_i + d*row_j) for T = ((a,b),(c,d))."""
    (a, b), (c, d) = T
    entries = dict(m.entries)
    row_i = {cc: v for (rr, cc), v in m.entries.items() if rr == i}
    row_j = {cc: v for (rr, cc), v in m.entries.items() if rr == j}
    for cc in set(row_i) | set(row_j):
        vi, vj = row_i.get(cc, 0), row_j.get(cc, 0)
        for rr, val in ((i, a * vi + b * vj), (j, c * vi + d * vj)):
            if val:
                entries[(rr, cc)] = val
            else:
                entries.pop((rr, cc), None)
    return SparseIntMatrix(m.rows, m.cols, entries)


def _apply_two_by_two_cols(m: SparseIntMatrix, i: int, j: int, T) -> SparseIntMatrix:
    """cols (i, j) <- (a*col_i + c*col_j, b*col_i + d*col_j): right-multiply
    by the 2x2 block embedding of T (so it undoes _apply_two_by_two_rows
    when T is the inverse)."""
    (a, b), (c, d) = T
    entries = dict(m.entries)
    col_i = {rr: v for (rr, cc), v in m.entries.items() if cc == i}
    col_j = {rr: v for (rr, cc), v in m.entries.items() if cc == j}
    for rr in set(col_i) | set(col_j):
        vi, vj = col_i.get(rr, 0), col_j.get(rr, 0)
        for cc, val in ((i, a * vi + c * vj), (j, b * vi + d * vj)):
            if val:
                entries[(rr, cc)] = val
            else:
                entries.pop((rr, cc), None)
    return SparseIntMatrix(m.rows, m.cols, entries)


def verify_smith_form(m: SparseIntMatrix, sf: SmithForm) -> None:
    """Assert all SmithForm invariants exactly (test helper, not hot path)."""
    for a, b in zip(sf.diag, sf.diag[1:]):
        assert b % a == 0, f"divisibility chain broken: {sf.diag}"
    assert all(d > 0 for d in sf.diag)
    if sf.left is not None:
        assert (sf.left @ m @ sf.right) == sf.diagonal_matrix()
        assert (sf.left @ sf.left_inv) == SparseIntMatrix.identity(m.rows)
        assert (sf.right @ sf.right_inv) == SparseIntMatrix.identity(m.cols)


# ---------------------------------------------------------------------------
# Column echelon / lattice machinery
# ---------------------------------------------------------------------------


class ColumnEchelon:
    """Incremental integer column echelon form with optional solve tails.

    Basis vectors are kept with distinct leading rows (smallest row index
    is the pivot).  Inserting a vector Euclid-reduces it against existing
    pivots, merging via gcd when divisibility fails.  Coordinates at
    indices >= nrows are bookkeeping tails that ride along; they are used
    to read off kernel elements and solve coefficients.
    """

    def __init__(self, nrows: int):
        self.nrows = nrows
        self.pivot_rows: dict[int, dict[int, int]] = {}  # leading row -> vector

    def _leading(self, vec: dict[int, int]) -> int | None:
        lead = None
        for r in vec:
            if r < self.nrows and (lead is None or r < lead):
                lead = r
        return lead

    def reduce(self, vec: Mapping[int, int]) -> dict[int, int]:
        """Reduce vec against the basis; returns the (new dict) residual."""
        vec = {k: v for k, v in vec.items() if v}
        while True:
            lead = self._leading(vec)
            if lead is None or lead not in self.pivot_rows:
                return vec
            basis = self.pivot_rows[lead]
            a, b = basis[lead], vec[lead]
            if b % a == 0:
                q = b // a
                for k, v in basis.items():
                    nv = vec.get(k, 0) - q * v
                    if nv:
                        vec[k] = nv
                    elif k in vec:
                        del vec[k]
            else:
                g, x, y = xgcd(a, b)
                u, w = a // g, b // g
                new_basis: dict[int, int] = {}
                new_vec: dict[int, int] = {}
                for k in set(basis) | set(vec):
                    av, bv = basis.get(k, 0), vec.get(k, 0)
                    nb = x * av + y * bv
                    nv = -w * av + u * bv
                    if nb:
                        new_basis[k] = nb
                    if nv:
                        new_vec[k] = nv
                self.pivot_rows[lead] = new_basis
                vec = new_vec

    def reduce_query(self, vec: Mapping[int, int]) -> dict[int, int]:
        """Division-only reduction that never mutates the basis.

        In an echelon basis with distinct leading rows, a vector lies in
        the lattice iff top-down division succeeds at every pivot, so a
        residual with nonzero head certifies non-membership.
        """
        vec = {k: v for k, v in vec.items() if v}
        while True:
            lead = self._leading(vec)
            if lead is None or lead not in self.pivot_rows:
                return vec
            basis = self.pivot_rows[lead]
            a, b = basis[lead], vec[lead]
            if b % a:
                return vec
            q = b // a
            for k, v in basis.items():
                nv = vec.get(k, 0) - q * v
                if nv:
                    vec[k] = nv
                elif k in vec:
                    del vec[k]

    def insert(self, vec: Mapping[int, int]) -> dict[int, int] | None:
        """Insert vec; returns the residual if its head reduced to zero
        (a dependence, whose tail encodes the kernel combination), else None."""
        residual = self.reduce(vec)
        lead = self._leading(residual)
        if lead is None:
            return residual
        self.pivot_rows[lead] = residual
        return None

    def head_rank(self) -> int:
        return len(self.pivot_rows)

    def basis_vectors(self) -> list[dict[int, int]]:
        """Echelon basis of the head lattice (tails stripped), sorted by pivot."""
        out = []
        for lead in sorted(self.pivot_rows):
            out.append({k: v for k, v in self.pivot_rows[lead].items() if k < self.nrows})
        return out


class LatticeSolver:
    """Solve A x = b over Z repeatedly for a fixed sparse A."""

    def __init__(self, a: SparseIntMatrix):
        self.a = a
        self.ech = ColumnEchelon(a.rows)
        for j, col in enumerate(a.columns()):
            vec = dict(col)
            vec[a.rows + j] = 1
            self.ech.insert(vec)

    def solve(self, b: Mapping[int, int]) -> dict[int, int] | None:
        """Coefficients {col: coeff} of one solution, or None if unsolvable."""
        residual = self.ech.reduce_query(b)
        if self.ech._leading(residual) is not None:
            return None
        return {k - self.a.rows: -v for k, v in residual.items() if k >= self.a.rows}

    def contains(self, b: Mapping[int, int]) -> bool:
        return self.solve(b) is not None


def kernel_basis(m: SparseIntMatrix) -> SparseIntMatrix:
    """Integer basis of ker(m) as columns of a cols x k matrix.

    Kernel elements are read off the bookkeeping tails of columns whose
    head reduces to zero in an extended echelon; the result is a basis of
    the full kernel lattice (not a finite-index sublattice).
    """
    ech = ColumnEchelon(m.rows)
    kernel_cols = []
    for j, col in enumerate(m.columns()):
        vec = dict(col)
        vec[m.rows + j] = 1
        res = ech.insert(vec)
        if res is not None:
            kernel_cols.append({k - m.rows: v for k, v in res.items() if k >= m.rows})
    return SparseIntMatrix.from_columns(m.cols, kernel_cols)


def lattice_basis(m: SparseIntMatrix) -> SparseIntMatrix:
    """Echelon basis (as columns) of the lattice spanned by the columns of m."""
    ech = ColumnEchelon(m.rows)
    for col in m.columns():
        ech.insert(col)
    return SparseIntMatrix.from_columns(m.rows, ech.basis_vectors())


# ---------------------------------------------------------------------------
# Homology and subquotients
# ---------------------------------------------------------------------------


def homology_at(d_in: SparseIntMatrix, d_out: SparseIntMatrix) -> FgAbGroup:
    """ker(d_out) / im(d_in) for boundary maps with d_out @ d_in = 0.

    The middle module is Z^n with n = d_out.cols = d_in.rows.  Since
    ker(d_out) is a saturated sublattice, the torsion of the quotient is
    exactly the nontrivial invariant-factor part of d_in, and the free
    rank is nullity(d_out) - rank(d_in).  Dimension mismatches and a
    nonzero composition are reported as precondition violations.
    """
    if d_out.cols != d_in.rows:
        raise PreconditionError(
            f"dimension mismatch: d_out has {d_out.cols} columns, d_in has {d_in.rows} rows")
    if not (d_out @ d_in).is_zero():
        raise PreconditionError("composition d_out @ d_in is nonzero")
    rank_out, _ = rank_and_factors(d_out)
    rank_in, factors_in = rank_and_factors(d_in)
    free = (d_out.cols - rank_out) - rank_in
    assert free >= 0, "image not contained in kernel despite zero composition"
    return FgAbGroup(free, tuple(d for d in factors_in if d > 1))


def homology_of_stream(n_mid: int, d_out: SparseIntMatrix,
                       d_in_columns: Iterable[Mapping[int, int]]) -> FgAbGroup:
    """Like :func:`homology_at` but with the incoming boundary supplied as a
    column stream (for matrices too wide to materialize).  The composition
    precondition is the caller's responsibility here."""
    if d_out.cols != n_mid:
        raise PreconditionError("dimension mismatch in homology_of_stream")
    rank_out, _ = rank_and_factors(d_out)
    rank_in, factors_in = rank_and_factors_stream(n_mid, d_in_columns)
    free = (n_mid - rank_out) - rank_in
    if free < 0:
        raise PreconditionError("image not contained in kernel (composition nonzero?)")
    return FgAbGroup(free, tuple(d for d in factors_in if d > 1))


class ContainmentError(PreconditionError):
    """V is not contained in U; carries a witness generator."""

    def __init__(self, witness: dict[int, int], index: int):
        super().__init__(f"generator #{index} is not in the ambient lattice: {witness}")
        self.witness = witness
        self.index = index


def subquotient(ambient_rank: int, u: SparseIntMatrix, v: SparseIntMatrix) -> FgAbGroup:
    """The group U/V for lattices spanned by the columns of u and v in Z^ambient.

    Containment of V in U is checked; a failure reports the first
    offending generator as a witness.
    """
    if u.rows != ambient_rank or v.rows != ambient_rank:
        raise PreconditionError("generator matrices must live in the ambient rank")
    u_basis = lattice_basis(u)
    solver = LatticeSolver(u_basis)
    coords = []
    for idx, col in enumerate(v.columns()):
        sol = solver.solve(col)
        if sol is None:
            raise ContainmentError(dict(col), idx)
        coords.append(sol)
    u_rank = u_basis.cols
    rel = SparseIntMatrix.from_columns(u_rank, coords)
    rank_rel, factors = rank_and_factors(rel)
    return FgAbGroup(u_rank - rank_rel, tuple(d for d in factors if d > 1))


def lattice_sum(n: int, *mats: SparseIntMatrix) -> SparseIntMatrix:
    """Echelon basis of the sum of the column lattices of mats inside Z^n."""
    ech = ColumnEchelon(n)
    for m in mats:
        if m.rows != n:
            raise ValueError("ambient mismatch in lattice_sum")
        for col in m.columns():
            ech.insert(col)
    return SparseIntMatrix.from_columns(n, ech.basis_vectors())


def lattice_intersection(n: int, a: SparseIntMatrix, b: SparseIntMatrix) -> SparseIntMatrix:
    """Basis of the intersection of two column lattices in Z^n.

    Kernel trick: solutions of [A | -B](x; y) = 0 give A x in the
    intersection.
    """
    stacked = a.stack_columns(b.scale(-1))
    ker = kernel_basis(stacked)
    ech = ColumnEchelon(n)
    for col in ker.columns():
        x_part = {k: v for k, v in col.items() if k < a.cols}
        vec = a.apply(x_part)
        if vec:
            ech.insert(vec)
    return SparseIntMatrix.from_columns(n, ech.basis_vectors())


def lattice_preimage(f: SparseIntMatrix, domain: SparseIntMatrix,
                     target: SparseIntMatrix) -> SparseIntMatrix:
    """Basis of {x in domain-lattice : f(x) in target-lattice}.

    domain spans a sublattice of Z^(f.cols); f maps Z^(f.cols) -> Z^(f.rows);
    target spans a sublattice of Z^(f.rows).
    """
    if domain.rows != f.cols or target.rows != f.rows:
        raise ValueError("shape mismatch in lattice_preimage")
    fd = f @ domain
    stacked = fd.stack_columns(target.scale(-1))
    ker = kernel_basis(stacked)
    ech = ColumnEchelon(f.cols)
    for col in ker.columns():
        x_part = {k: v for k, v in col.items() if k < domain.cols}
        vec = domain.apply(x_part)
        if vec:
            ech.insert(vec)
    return SparseIntMatrix.from_columns(f.cols, ech.basis_vectors())


def lattices_equal(a: SparseIntMatrix, b: SparseIntMatrix) -> bool:
    if a.rows != b.rows:
        raise ValueError("ambient mismatch")
    sa = LatticeSolver(lattice_basis(a))
    if not all(sa.contains(col) for col in b.columns()):
        return False
    sb = LatticeSolver(lattice_basis(b))
    return all(sb.contains(col) for col in a.columns())
