"""Sparse matrices over an exact field, with rref / kernel / solve.

Matrices are immutable values: every operation returns a new matrix.
Elimination runs a left-to-right column sweep (so the output is the unique
reduced row echelon form) and picks, among candidate pivot rows, one with
the fewest nonzero entries; ties go to the lowest row index.  Bar-type
differentials are extremely sparse and fill-in dominates the cost.
"""

from __future__ import annotations

from .fields import FieldSpec


class DimensionMismatch(Exception):
    pass


class SparseMatrix:
    """rows x cols matrix over ``field``; entries is {(r, c): nonzero value}."""

    __slots__ = ("rows", "cols", "field", "entries")

    def __init__(self, rows: int, cols: int, field: FieldSpec, entries=None):
        self.rows = rows
        self.cols = cols
        self.field = field
        clean = {}
        for (r, c), v in (entries or {}).items():
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError("entry (%d, %d) out of bounds" % (r, c))
            v = field.coerce(v)
            if v:
                clean[(r, c)] = v
        self.entries = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, rows, cols, field):
        return cls(rows, cols, field, {})

    @classmethod
    def identity(cls, n, field):
        one = field.one()
        return cls(n, n, field, {(i, i): one for i in range(n)})

    @classmethod
    def from_rows(cls, rows_list, field):
        rows = len(rows_list)
        cols = len(rows_list[0]) if rows else 0
        entries = {}
        for r, row in enumerate(rows_list):
            for c, v in enumerate(row):
                entries[(r, c)] = v
        return cls(rows, cols, field, entries)

    # -- basics ------------------------------------------------------------

    def get(self, r, c):
        return self.entries.get((r, c), self.field.zero())

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.field == other.field
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(sorted(self.entries.items()))))

    def __repr__(self):
        return "SparseMatrix(%dx%d, %d nonzero)" % (self.rows, self.cols, len(self.entries))

    def transpose(self):
        return SparseMatrix(
            self.cols, self.rows, self.field, {(c, r): v for (r, c), v in self.entries.items()}
        )

    def add(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("%r + %r" % (self, other))
        f = self.field
        out = dict(self.entries)
        for key, v in other.entries.items():
            s = f.add(out.get(key, f.zero()), v)
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return SparseMatrix(self.rows, self.cols, f, out)

    def scale(self, scalar):
        f = self.field
        scalar = f.coerce(scalar)
        if not scalar:
            return SparseMatrix.zero(self.rows, self.cols, f)
        return SparseMatrix(
            self.rows, self.cols, f, {k: f.mul(v, scalar) for k, v in self.entries.items()}
        )

    def neg(self):
        return self.scale(self.field.from_int(-1))

    def mul(self, other):
        """Matrix product self @ other."""
        if self.cols != other.rows:
            raise DimensionMismatch("%r @ %r" % (self, other))
        f = self.field
        by_row = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc = {}
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                key = (r, c)
                s = f.add(acc.get(key, f.zero()), f.mul(v, w))
                if s:
                    acc[key] = s
                else:
                    acc.pop(key, None)
        return SparseMatrix(self.rows, other.cols, f, acc)

    def hstack(self, other):
        if self.rows != other.rows or self.field != other.field:
            raise DimensionMismatch("hstack")
        entries = dict(self.entries)
        for (r, c), v in other.entries.items():
            entries[(r, c + self.cols)] = v
        return SparseMatrix(self.rows, self.cols + other.cols, self.field, entries)

    def column(self, c):
        return {r: v for (r, cc), v in self.entries.items() if cc == c}

    # -- elimination ---------------------------------------------------------

    def _row_dicts(self):
        rows = {}
        for (r, c), v in self.entries.items():
            rows.setdefault(r, {})[c] = v
        return rows

    def rref(self):
        """Return (reduced, pivot_cols, rank): the unique RREF of self."""
        f = self.field
        work = self._row_dicts()
        order = []  # pivot rows in pivot-column order
        pivots = []
        free_rows = set(work.keys())
        for col in range(self.cols):
            candidates = [r for r in free_rows if work[r].get(col)]
            if not candidates:
                continue
            # least-fill pivot row, ties to the lowest index
            pr = min(candidates, key=lambda r: (len(work[r]), r))
            free_rows.discard(pr)
            prow = work[pr]
            inv = f.inv(prow[col])
            prow = {c: f.mul(v, inv) for c, v in prow.items()}
            work[pr] = prow
            for r in list(free_rows):
                coeff = work[r].get(col)
                if not coeff:
                    continue
                row = work[r]
                for c, v in prow.items():
                    s = f.sub(row.get(c, f.zero()), f.mul(coeff, v))
                    if s:
                        row[c] = s
                    else:
                        row.pop(c, None)
                if not row:
                    free_rows.discard(r)
                    del work[r]
            # clear the column above earlier pivots
            for er, ecol in zip(order, pivots):
                coeff = work[er].get(col)
                if coeff:
                    row = work[er]
                    for c, v in prow.items():
                        s = f.sub(row.get(c, f.zero()), f.mul(coeff, v))
                        if s:
                            row[c] = s
                        else:
                            row.pop(c, None)
            order.append(pr)
            pivots.append(col)
        entries = {}
        for i, pr in enumerate(order):
            for c, v in work[pr].items():
                entries[(i, c)] = v
        reduced = SparseMatrix(self.rows, self.cols, f, entries)
        return reduced, pivots, len(pivots)

    def rank(self) -> int:
        return self.rref()[2]

    def kernel_basis(self):
        """Columns form a basis of the null space; returns cols x nullity matrix."""
        f = self.field
        reduced, pivots, rank = self.rref()
        pivot_set = set(pivots)
        free_cols = [c for c in range(self.cols) if c not in pivot_set]
        entries = {}
        for j, fc in enumerate(free_cols):
            entries[(fc, j)] = f.one()
            for i, pc in enumerate(pivots):
                v = reduced.get(i, fc)
                if v:
                    entries[(pc, j)] = f.neg(v)
        return SparseMatrix(self.cols, len(free_cols), f, entries)

    def solve(self, b):
        """Solve M x = b for a column vector b (dict row -> value or list).

        Returns (particular, kernel, certificate): ``particular`` is a dict
        col -> value when solvable, otherwise None and ``certificate`` holds
        the offending row of the reduced augmented matrix (with its pivot in
        the constant column).
        """
        f = self.field
        if isinstance(b, (list, tuple)):
            if len(b) != self.rows:
                raise DimensionMismatch("rhs length %d != %d rows" % (len(b), self.rows))
            b = {i: v for i, v in enumerate(b)}
        bcol = SparseMatrix(self.rows, 1, f, {(r, 0): v for r, v in b.items()})
        aug = self.hstack(bcol)
        reduced, pivots, rank = aug.rref()
        if pivots and pivots[-1] == self.cols:
            cert_row = rank - 1
            certificate = {c: v for (r, c), v in reduced.entries.items() if r == cert_row}
            return None, self.kernel_basis(), certificate
        particular = {}
        for i, pc in enumerate(pivots):
            v = reduced.get(i, self.cols)
            if v:
                particular[pc] = v
        return particular, self.kernel_basis(), None

    def apply(self, vec):
        """Apply to a coordinate dict {col: value}; returns {row: value}."""
        f = self.field
        out = {}
        for (r, c), v in self.entries.items():
            w = vec.get(c)
            if w:
                s = f.add(out.get(r, f.zero()), f.mul(v, w))
                if s:
                    out[r] = s
                else:
                    out.pop(r, None)
        return out
