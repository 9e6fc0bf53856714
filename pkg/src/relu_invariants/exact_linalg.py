"""Exact rational matrices: rank, kernel, inverse, minors.

Everything here works over ``fractions.Fraction``.  Rank and determinants go
through fraction-free (Bareiss) elimination on integer matrices obtained by
clearing denominators row by row, which keeps intermediate entries bounded by
minors of the input.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

__all__ = [
    "RationalMatrix",
    "MinorIndex",
    "MinorEnumeration",
    "SingularMatrixError",
    "parse_rational",
    "format_rational",
    "rank_exact",
    "kernel_basis",
    "invert",
    "determinant",
    "minor_value",
    "enumerate_minors",
    "minor_count",
    "primitive_integer_vector",
]


class SingularMatrixError(ValueError):
    """Raised when an inverse is requested for a singular matrix."""


def parse_rational(value) -> Fraction:
    """Parse ``value`` into a Fraction.

    Accepts ints, Fractions and strings of the form ``"p"`` or ``"p/q"``.
    Floats and decimal strings are rejected so that no rounding sneaks in.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not a p/q rational: {value!r}")
        num, sep, den = text.partition("/")
        try:
            p = int(num)
            q = int(den) if sep else 1
        except ValueError:
            raise ValueError(f"not a p/q rational: {value!r}") from None
        if q == 0:
            raise ValueError(f"zero denominator: {value!r}")
        return Fraction(p, q)
    raise ValueError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class RationalMatrix:
    """Immutable dense matrix of Fractions, stored row-major."""

    __slots__ = ("_rows", "_nrows", "_ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        data = tuple(tuple(parse_rational(v) for v in row) for row in rows)
        if data:
            width = len(data[0])
            if any(len(r) != width for r in data):
                raise ValueError("ragged rows")
            if ncols is not None and ncols != width:
                raise ValueError("ncols does not match row length")
        else:
            width = ncols or 0
        self._rows = data
        self._nrows = len(data)
        self._ncols = width

    @classmethod
    def _trusted(cls, rows: tuple, nrows: int, ncols: int) -> "RationalMatrix":
        obj = cls.__new__(cls)
        obj._rows = rows
        obj._nrows = nrows
        obj._ncols = ncols
        return obj

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "RationalMatrix":
        z = Fraction(0)
        return cls._trusted(tuple((z,) * ncols for _ in range(nrows)), nrows, ncols)

    @classmethod
    def ones(cls, nrows: int, ncols: int) -> "RationalMatrix":
        o = Fraction(1)
        return cls._trusted(tuple((o,) * ncols for _ in range(nrows)), nrows, ncols)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls._trusted(
            tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)), n, n
        )

    @classmethod
    def diag(cls, values: Sequence) -> "RationalMatrix":
        n = len(values)
        vals = [parse_rational(v) for v in values]
        return cls._trusted(
            tuple(tuple(vals[i] if i == j else Fraction(0) for j in range(n)) for i in range(n)),
            n,
            n,
        )

    @classmethod
    def column(cls, values: Sequence) -> "RationalMatrix":
        return cls([[v] for v in values], ncols=1)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int | None = None) -> "RationalMatrix":
        if not columns:
            return cls.zeros(nrows or 0, 0)
        return cls(zip(*columns))

    @property
    def shape(self) -> tuple[int, int]:
        return (self._nrows, self._ncols)

    @property
    def nrows(self) -> int:
        return self._nrows

    @property
    def ncols(self) -> int:
        return self._ncols

    @property
    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._rows

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [tuple(r[j] for r in self._rows) for j in range(self._ncols)]

    def __getitem__(self, key):
        i, j = key
        return self._rows[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self.shape, self._rows))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_rational(v) for v in r) for r in self._rows)
        return f"RationalMatrix({self._nrows}x{self._ncols}: [{body}])"

    @property
    def T(self) -> "RationalMatrix":
        if self._nrows == 0:
            return RationalMatrix.zeros(self._ncols, 0)
        return RationalMatrix._trusted(tuple(zip(*self._rows)), self._ncols, self._nrows)

    def _check_same_shape(self, other: "RationalMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix._trusted(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self._rows, other._rows)),
            self._nrows,
            self._ncols,
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix._trusted(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self._rows, other._rows)),
            self._nrows,
            self._ncols,
        )

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-1)

    def scale(self, c) -> "RationalMatrix":
        c = parse_rational(c)
        return RationalMatrix._trusted(
            tuple(tuple(c * a for a in r) for r in self._rows), self._nrows, self._ncols
        )

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self._ncols != other._nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        cols = other.columns()
        zero = Fraction(0)
        out = tuple(
            tuple(sum((a * b for a, b in zip(r, c) if a and b), zero) for c in cols)
            for r in self._rows
        )
        return RationalMatrix._trusted(out, self._nrows, other._ncols)

    def apply(self, vector: Sequence) -> tuple[Fraction, ...]:
        if len(vector) != self._ncols:
            raise ValueError(f"vector of length {len(vector)} for matrix {self.shape}")
        zero = Fraction(0)
        return tuple(sum((a * b for a, b in zip(r, vector) if a and b), zero) for r in self._rows)

    def hstack(self, *others: "RationalMatrix") -> "RationalMatrix":
        mats = (self, *others)
        if any(m._nrows != self._nrows for m in mats):
            raise ValueError("hstack needs equal row counts")
        rows = tuple(tuple(itertools.chain.from_iterable(m._rows[i] for m in mats)) for i in range(self._nrows))
        return RationalMatrix._trusted(rows, self._nrows, sum(m._ncols for m in mats))

    def vstack(self, *others: "RationalMatrix") -> "RationalMatrix":
        mats = (self, *others)
        if any(m._ncols != self._ncols for m in mats):
            raise ValueError("vstack needs equal column counts")
        rows = tuple(itertools.chain.from_iterable(m._rows for m in mats))
        return RationalMatrix._trusted(rows, len(rows), self._ncols)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix._trusted(
            tuple(tuple(self._rows[i][j] for j in cols) for i in rows), len(rows), len(cols)
        )

    def select_columns(self, cols: Sequence[int]) -> "RationalMatrix":
        return self.submatrix(range(self._nrows), cols)

    def is_zero(self) -> bool:
        return all(not v for r in self._rows for v in r)

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(v) for v in r] for r in self._rows]


def _integer_rows(matrix: RationalMatrix) -> list[list[int]]:
    """Scale every row by the lcm of its denominators; rank is unchanged."""
    out = []
    for row in matrix.rows:
        den = 1
        for v in row:
            if v.denominator != 1:
                den = den * v.denominator // math.gcd(den, v.denominator)
        out.append([int(v * den) for v in row])
    return out


def _bareiss_echelon(a: list[list[int]]) -> tuple[int, list[tuple[int, int]], int]:
    """In-place fraction-free row echelon form.

    Returns ``(rank, pivots, sign)`` where ``sign`` tracks row swaps.  Columns
    without a pivot are skipped; every stored entry stays a minor of the input,
    so the divisions by the previous pivot are exact.
    """
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    prev = 1
    rank = 0
    sign = 1
    pivots = []
    for col in range(ncols):
        if rank == nrows:
            break
        piv = next((i for i in range(rank, nrows) if a[i][col]), None)
        if piv is None:
            continue
        if piv != rank:
            a[rank], a[piv] = a[piv], a[rank]
            sign = -sign
        p = a[rank][col]
        prow = a[rank]
        for i in range(rank + 1, nrows):
            row = a[i]
            f = row[col]
            if f:
                for j in range(col + 1, ncols):
                    row[j] = (row[j] * p - f * prow[j]) // prev
            else:
                for j in range(col + 1, ncols):
                    row[j] = (row[j] * p) // prev
            row[col] = 0
        pivots.append((rank, col))
        prev = p
        rank += 1
    return rank, pivots, sign


def rank_exact(matrix: RationalMatrix) -> int:
    """Exact rank over the rationals."""
    if matrix.nrows == 0 or matrix.ncols == 0:
        return 0
    rows = _integer_rows(matrix)
    # eliminate along the shorter side
    if matrix.ncols < matrix.nrows:
        rows = [list(c) for c in zip(*rows)]
    rank, _, _ = _bareiss_echelon(rows)
    return rank


def determinant(matrix: RationalMatrix) -> Fraction:
    n, m = matrix.shape
    if n != m:
        raise ValueError(f"determinant of non-square {matrix.shape} matrix")
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    rows = []
    for row in matrix.rows:
        den = 1
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
        scale /= den
        rows.append([int(v * den) for v in row])
    rank, _, sign = _bareiss_echelon(rows)
    if rank < n:
        return Fraction(0)
    return sign * rows[n - 1][n - 1] * scale


def _cofactor_det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = Fraction(0)
    for j in range(n):
        if m[0][j]:
            sub = [row[:j] + row[j + 1:] for row in m[1:]]
            term = m[0][j] * _cofactor_det(sub)
            total += term if j % 2 == 0 else -term
    return total


def _rref(matrix: RationalMatrix) -> tuple[list[list[Fraction]], list[int]]:
    a = [list(r) for r in matrix.rows]
    nrows, ncols = matrix.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        a[r] = [v / p for v in a[r]]
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def primitive_integer_vector(vector: Sequence) -> tuple[int, ...]:
    """Scale to coprime integers with the first nonzero entry positive."""
    vals = [parse_rational(v) for v in vector]
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g == 0:
        return tuple(ints)
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v)
    if lead < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def kernel_basis(matrix: RationalMatrix) -> list[tuple[Fraction, ...]]:
    """Basis of the right null space, one vector per free column.

    Vectors are returned as primitive integer vectors (as Fractions) with the
    first nonzero coordinate positive.
    """
    nrows, ncols = matrix.shape
    if ncols == 0:
        return []
    if nrows == 0:
        return [tuple(Fraction(int(i == j)) for i in range(ncols)) for j in range(ncols)]
    a, pivots = _rref(matrix)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -a[row][f]
        basis.append(tuple(Fraction(x) for x in primitive_integer_vector(v)))
    return basis


def invert(matrix: RationalMatrix) -> RationalMatrix:
    n, m = matrix.shape
    if n != m:
        raise SingularMatrixError(f"cannot invert non-square {matrix.shape} matrix")
    aug = matrix.hstack(RationalMatrix.identity(n))
    a, pivots = _rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise SingularMatrixError("matrix is singular")
    return RationalMatrix([row[n:] for row in a])


@dataclass(frozen=True)
class MinorIndex:
    row_subset: tuple[int, ...]
    col_subset: tuple[int, ...]

    def __post_init__(self):
        if len(self.row_subset) != len(self.col_subset):
            raise ValueError("row and column subsets differ in size")
        for s in (self.row_subset, self.col_subset):
            if any(b <= a for a, b in zip(s, s[1:])):
                raise ValueError("subsets must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.row_subset)


@dataclass(frozen=True)
class MinorEnumeration:
    total: int
    minors: tuple[MinorIndex, ...]
    truncated: bool

    def __iter__(self) -> Iterator[MinorIndex]:
        return iter(self.minors)


def minor_count(nrows: int, ncols: int, size: int) -> int:
    if size < 1:
        return 0
    return math.comb(nrows, size) * math.comb(ncols, size)


def enumerate_minors(nrows: int, ncols: int, size: int, cap: int | None = 10_000) -> MinorEnumeration:
    """All ``size``-minor index pairs, materialized up to ``cap``.

    The total is always the exact binomial count, whether or not the list was
    truncated.
    """
    if size < 1:
        raise ValueError("minor size must be positive")
    total = minor_count(nrows, ncols, size)
    pairs = itertools.product(
        itertools.combinations(range(nrows), size), itertools.combinations(range(ncols), size)
    )
    if cap is not None:
        pairs = itertools.islice(pairs, cap)
    minors = tuple(MinorIndex(r, c) for r, c in pairs)
    return MinorEnumeration(total=total, minors=minors, truncated=len(minors) < total)


def minor_value(matrix: RationalMatrix, index: MinorIndex) -> Fraction:
    """Evaluate one minor: cofactor expansion up to size 4, elimination above."""
    if index.row_subset and (index.row_subset[-1] >= matrix.nrows or index.col_subset[-1] >= matrix.ncols):
        raise IndexError("minor index out of bounds")
    sub = matrix.submatrix(index.row_subset, index.col_subset)
    if index.size <= 4:
        return _cofactor_det(sub.rows) if index.size else Fraction(1)
    return determinant(sub)
