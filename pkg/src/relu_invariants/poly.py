"""Sparse multivariate polynomials over the rationals.

Only what is needed to expand individual minors of a constraint matrix into
explicit polynomials: variables are ``(symbol, block, row, col)`` tuples
naming one entry of a symbol matrix.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Callable, Mapping

from .constraints import Cell, RankConstraint, symbol_shape
from .exact_linalg import MinorIndex, format_rational, parse_rational
from .model import Architecture

__all__ = ["Polynomial", "linear_form_matrix", "minor_polynomial", "variable_name"]

Var = tuple[str, int, int, int]
Monomial = tuple[Var, ...]


def variable_name(var: Var) -> str:
    symbol, block, row, col = var
    return f"{symbol.lower()}{block + 1}_{row + 1}{col + 1}"


class Polynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = parse_rational(c)
            if c:
                clean[tuple(sorted(mono))] = clean.get(tuple(sorted(mono)), Fraction(0)) + c
        self.terms = {m: c for m, c in clean.items() if c}

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({(): parse_rational(c)})

    @classmethod
    def var(cls, v: Var, coef=1) -> "Polynomial":
        return cls({(v,): parse_rational(coef)})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out: dict = defaultdict(Fraction)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[tuple(sorted(m1 + m2))] += c1 * c2
        return Polynomial(out)

    def scale(self, c) -> "Polynomial":
        c = parse_rational(c)
        return Polynomial({m: c * v for m, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def variables(self) -> set[Var]:
        return {v for m in self.terms for v in m}

    def evaluate(self, value: Callable[[Var], Fraction]) -> Fraction:
        total = Fraction(0)
        for mono, c in self.terms.items():
            t = c
            for v in mono:
                t *= value(v)
                if not t:
                    break
            total += t
        return total

    def ratio_to(self, other: "Polynomial") -> Fraction | None:
        """``c`` with ``self == c * other`` if the two are proportional."""
        if self.is_zero() or other.is_zero():
            return None
        if set(self.terms) != set(other.terms):
            return None
        mono = next(iter(other.terms))
        c = self.terms[mono] / other.terms[mono]
        if all(self.terms[m] == c * other.terms[m] for m in other.terms):
            return c
        return None

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            names = "*".join(variable_name(v) for v in mono)
            if not names:
                parts.append(format_rational(c))
            elif c == 1:
                parts.append(names)
            elif c == -1:
                parts.append(f"-{names}")
            else:
                parts.append(f"{format_rational(c)}*{names}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__

    def to_json(self) -> list:
        return [
            {"monomial": [list(v) for v in mono], "coef": format_rational(c)}
            for mono, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: list) -> "Polynomial":
        return cls({tuple(tuple(v) for v in t["monomial"]): parse_rational(t["coef"]) for t in data})


def _cell_forms(cell: Cell, arch: Architecture, data_cols) -> list[list[Polynomial]]:
    rows, cols = cell.shape(arch, data_cols)
    if cell.kind == "zero":
        return [[Polynomial() for _ in range(cols)] for _ in range(rows)]
    if cell.kind == "ones":
        return [[Polynomial.constant(1) for _ in range(cols)] for _ in range(rows)]
    acc = [[defaultdict(Fraction) for _ in range(cols)] for _ in range(rows)]
    for t in cell.terms:
        if not t.coef:
            continue
        sr, sc = symbol_shape(t.symbol, t.block, arch, data_cols)
        er, ec = (sc, sr) if t.transpose else (sr, sc)
        left = t.left.rows if t.left is not None else None
        right = t.right.rows if t.right is not None else None
        for i in range(rows):
            for j in range(cols):
                for a in range(er):
                    la = left[i][a] if left is not None else Fraction(int(a == i))
                    if not la:
                        continue
                    for b in range(ec):
                        rb = right[b][j] if right is not None else Fraction(int(b == j))
                        if not rb:
                            continue
                        var = (t.symbol, t.block, b, a) if t.transpose else (t.symbol, t.block, a, b)
                        acc[i][j][(var,)] += t.coef * la * rb
    return [[Polynomial(entry) for entry in row] for row in acc]


def linear_form_matrix(c: RankConstraint, arch: Architecture, data_cols=None) -> list[list[Polynomial]]:
    """The assembled constraint matrix with each entry a degree-<=1 polynomial."""
    heights, widths = c.block_shape(arch, data_cols)
    out: list[list[Polynomial]] = []
    for r, row in enumerate(c.grid):
        pieces = [_cell_forms(cell, arch, data_cols) for cell in row]
        for i in range(heights[r]):
            out.append([p for piece in pieces for p in piece[i]])
    return out


def _det(m: list[list[Polynomial]]) -> Polynomial:
    n = len(m)
    if n == 1:
        return m[0][0]
    total = Polynomial()
    for j in range(n):
        if m[0][j].is_zero():
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def minor_polynomial(c: RankConstraint, index: MinorIndex, arch: Architecture, data_cols=None) -> Polynomial:
    """Expand one minor of the constraint matrix as an explicit polynomial."""
    forms = linear_form_matrix(c, arch, data_cols)
    sub = [[forms[i][j] for j in index.col_subset] for i in index.row_subset]
    return _det(sub)
