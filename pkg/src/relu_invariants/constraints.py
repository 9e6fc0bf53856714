"""Rank-constraint certificates and their JSON form.

A :class:`RankConstraint` states that a block matrix assembled from the
network's per-block matrices has rank at most ``bound``, i.e. all of its
``(bound + 1)``-minors vanish.  Cells are sums of terms
``coef * left @ S @ right`` where ``S`` is a symbol matrix (optionally
transposed):

``M``  masked matrix of a block, shape ``n_L x n_0``
``Y``  network output on a block of data, shape ``n_L x m_i``
``b``  offset vector of a block, shape ``n_L x 1``
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .exact_linalg import (
    RationalMatrix,
    enumerate_minors,
    format_rational,
    minor_count,
    parse_rational,
)
from .model import Architecture

__all__ = [
    "SYMBOLS",
    "Term",
    "Cell",
    "RankConstraint",
    "LinearRelation",
    "symbol_shape",
    "constraint_to_json",
    "constraint_from_json",
    "relation_to_json",
    "relation_from_json",
]

SYMBOLS = ("M", "Y", "b")


def symbol_shape(symbol: str, block: int, arch: Architecture, data_cols: Sequence[int] | None = None) -> tuple[int, int]:
    if symbol == "M":
        return (arch.n_out, arch.n_in)
    if symbol == "b":
        return (arch.n_out, 1)
    if symbol == "Y":
        if data_cols is None or block >= len(data_cols):
            raise ValueError(f"Y{block + 1} needs a data block")
        return (arch.n_out, data_cols[block])
    raise ValueError(f"unknown symbol {symbol!r}")


@dataclass(frozen=True)
class Term:
    block: int
    coef: Fraction = Fraction(1)
    transpose: bool = False
    left: RationalMatrix | None = None
    right: RationalMatrix | None = None
    symbol: str = "M"

    def __post_init__(self):
        object.__setattr__(self, "coef", parse_rational(self.coef))
        if self.symbol not in SYMBOLS:
            raise ValueError(f"unknown symbol {self.symbol!r}")
        if self.block < 0:
            raise ValueError("block index must be non-negative")

    def shape(self, arch: Architecture, data_cols=None) -> tuple[int, int]:
        r, c = symbol_shape(self.symbol, self.block, arch, data_cols)
        if self.transpose:
            r, c = c, r
        if self.left is not None:
            if self.left.ncols != r:
                raise ValueError(f"left factor {self.left.shape} does not fit {self.symbol}{self.block + 1}")
            r = self.left.nrows
        if self.right is not None:
            if self.right.nrows != c:
                raise ValueError(f"right factor {self.right.shape} does not fit {self.symbol}{self.block + 1}")
            c = self.right.ncols
        return r, c

    def describe(self) -> str:
        core = f"{self.symbol}{self.block + 1}" + ("^T" if self.transpose else "")
        if self.left is not None:
            core = f"L*{core}"
        if self.right is not None:
            core = f"{core}*R"
        if self.coef == 1:
            return core
        if self.coef == -1:
            return f"-{core}"
        return f"{format_rational(self.coef)}*{core}"


@dataclass(frozen=True)
class Cell:
    terms: tuple[Term, ...] = ()
    kind: str = "sum"
    fixed_shape: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in ("sum", "zero", "ones"):
            raise ValueError(f"unknown cell kind {self.kind!r}")
        if self.kind == "sum" and not self.terms:
            raise ValueError("a sum cell needs at least one term; use Cell.zero")
        if self.kind != "sum" and self.fixed_shape is None:
            raise ValueError("zero and ones cells need an explicit shape")
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def zero(cls, nrows: int, ncols: int) -> "Cell":
        return cls(kind="zero", fixed_shape=(nrows, ncols))

    @classmethod
    def ones(cls, nrows: int, ncols: int) -> "Cell":
        return cls(kind="ones", fixed_shape=(nrows, ncols))

    @classmethod
    def block(cls, i: int, transpose: bool = False, symbol: str = "M") -> "Cell":
        return cls((Term(i, transpose=transpose, symbol=symbol),))

    @classmethod
    def lincomb(cls, lam: Sequence[int], transpose: bool = False) -> "Cell":
        terms = tuple(Term(i, Fraction(c), transpose) for i, c in enumerate(lam) if c)
        if not terms:
            # sum with all-zero weights: keep a zero-weighted term so the shape is known
            terms = (Term(0, Fraction(0), transpose),)
        return cls(terms)

    def shape(self, arch: Architecture, data_cols=None) -> tuple[int, int]:
        if self.kind != "sum":
            return self.fixed_shape
        shapes = {t.shape(arch, data_cols) for t in self.terms}
        if len(shapes) != 1:
            raise ValueError(f"terms in one cell have different shapes: {sorted(shapes)}")
        return shapes.pop()

    def blocks_used(self) -> set[tuple[str, int]]:
        return {(t.symbol, t.block) for t in self.terms}

    def describe(self) -> str:
        if self.kind == "zero":
            return "0"
        if self.kind == "ones":
            return "1"
        text = " + ".join(t.describe() for t in self.terms)
        return text.replace("+ -", "- ")


@dataclass(frozen=True)
class RankConstraint:
    """rank(grid) <= bound, with provenance.

    ``raw_bound`` keeps the bound before clipping to the matrix shape.
    ``redundant`` is advisory: the family is implied by others.
    """

    grid: tuple[tuple[Cell, ...], ...]
    bound: int
    label: str
    family: str = ""
    raw_bound: int | None = None
    redundant: bool = False
    note: str = ""
    blocks: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.grid)
        if not grid or not grid[0] or any(len(r) != len(grid[0]) for r in grid):
            raise ValueError("constraint grid must be a non-empty rectangle")
        object.__setattr__(self, "grid", grid)
        if self.bound < 0:
            raise ValueError("rank bound must be non-negative")
        if self.raw_bound is None:
            object.__setattr__(self, "raw_bound", self.bound)

    @classmethod
    def single(cls, cell: Cell, bound: int, label: str, **kw) -> "RankConstraint":
        return cls(((cell,),), bound, label, **kw)

    def block_shape(self, arch: Architecture, data_cols=None) -> tuple[list[int], list[int]]:
        """Row heights and column widths of the grid, checked for consistency."""
        shapes = [[c.shape(arch, data_cols) for c in row] for row in self.grid]
        heights = []
        for r, row in enumerate(shapes):
            hs = {s[0] for s in row}
            if len(hs) != 1:
                raise ValueError(f"grid row {r} mixes heights {sorted(hs)}")
            heights.append(hs.pop())
        widths = []
        for c in range(len(self.grid[0])):
            ws = {row[c][1] for row in shapes}
            if len(ws) != 1:
                raise ValueError(f"grid column {c} mixes widths {sorted(ws)}")
            widths.append(ws.pop())
        return heights, widths

    def shape(self, arch: Architecture, data_cols=None) -> tuple[int, int]:
        heights, widths = self.block_shape(arch, data_cols)
        return sum(heights), sum(widths)

    @property
    def minor_size(self) -> int:
        return self.bound + 1

    def count(self, arch: Architecture, data_cols=None) -> int:
        rows, cols = self.shape(arch, data_cols)
        return minor_count(rows, cols, self.minor_size)

    def is_vacuous(self, arch: Architecture, data_cols=None) -> bool:
        return self.count(arch, data_cols) == 0

    def minors(self, arch: Architecture, data_cols=None, cap: int | None = 10_000):
        rows, cols = self.shape(arch, data_cols)
        return enumerate_minors(rows, cols, self.minor_size, cap)

    def symbols_used(self) -> set[tuple[str, int]]:
        out = set()
        for row in self.grid:
            for cell in row:
                out |= cell.blocks_used()
        return out

    def describe(self) -> str:
        rows = [" | ".join(c.describe() for c in row) for row in self.grid]
        body = rows[0] if len(rows) == 1 else "[" + " ; ".join(rows) + "]"
        return f"rank({body}) <= {self.bound}"

    def with_bound(self, bound: int) -> "RankConstraint":
        return replace(self, bound=bound)


@dataclass(frozen=True)
class LinearRelation:
    """sum_j coefficients[j] * Y_block[row, j] = 0."""

    block: int
    row: int
    coefficients: tuple[Fraction, ...]
    symbol: str = "Y"
    label: str = "linear"

    def __post_init__(self):
        coeffs = tuple(parse_rational(c) for c in self.coefficients)
        if not any(coeffs):
            raise ValueError("a linear relation cannot be identically zero")
        object.__setattr__(self, "coefficients", coeffs)

    def evaluate(self, y: RationalMatrix) -> Fraction:
        return sum((c * v for c, v in zip(self.coefficients, y.rows[self.row]) if c), Fraction(0))


def _matrix_json(m: RationalMatrix | None):
    return None if m is None else m.to_strings()


def _matrix_from_json(data) -> RationalMatrix | None:
    return None if data is None else RationalMatrix(data)


def _cell_json(cell: Cell) -> dict:
    if cell.kind != "sum":
        return {"kind": cell.kind, "shape": list(cell.fixed_shape)}
    return {
        "kind": "sum",
        "terms": [
            {
                "symbol": t.symbol,
                "block": t.block,
                "coef": format_rational(t.coef),
                "transpose": t.transpose,
                "left": _matrix_json(t.left),
                "right": _matrix_json(t.right),
            }
            for t in cell.terms
        ],
    }


def _cell_from_json(data: dict) -> Cell:
    kind = data["kind"]
    if kind != "sum":
        return Cell(kind=kind, fixed_shape=tuple(data["shape"]))
    return Cell(
        tuple(
            Term(
                block=int(t["block"]),
                coef=parse_rational(t.get("coef", "1")),
                transpose=bool(t.get("transpose", False)),
                left=_matrix_from_json(t.get("left")),
                right=_matrix_from_json(t.get("right")),
                symbol=t.get("symbol", "M"),
            )
            for t in data["terms"]
        )
    )


def constraint_to_json(c: RankConstraint, arch: Architecture | None = None, data_cols=None, cap: int | None = None) -> dict:
    out = {
        "label": c.label,
        "family": c.family,
        "bound": c.bound,
        "raw_bound": c.raw_bound,
        "redundant": c.redundant,
        "note": c.note,
        "blocks": list(c.blocks),
        "expression": c.describe(),
        "grid": [[_cell_json(cell) for cell in row] for row in c.grid],
    }
    if arch is not None:
        rows, cols = c.shape(arch, data_cols)
        total = c.count(arch, data_cols)
        out["shape"] = [rows, cols]
        out["minor_size"] = c.minor_size
        out["count"] = total
        if cap is not None:
            out["materialized"] = min(total, cap)
            out["truncated"] = total > cap
    return out


def constraint_from_json(data: dict) -> RankConstraint:
    return RankConstraint(
        grid=tuple(tuple(_cell_from_json(cell) for cell in row) for row in data["grid"]),
        bound=int(data["bound"]),
        label=data.get("label", ""),
        family=data.get("family", ""),
        raw_bound=data.get("raw_bound"),
        redundant=bool(data.get("redundant", False)),
        note=data.get("note", ""),
        blocks=tuple(data.get("blocks", ())),
    )


def relation_to_json(r: LinearRelation) -> dict:
    return {
        "label": r.label,
        "symbol": r.symbol,
        "block": r.block,
        "row": r.row,
        "coefficients": [format_rational(c) for c in r.coefficients],
    }


def relation_from_json(data: dict) -> LinearRelation:
    return LinearRelation(
        block=int(data["block"]),
        row=int(data["row"]),
        coefficients=tuple(parse_rational(c) for c in data["coefficients"]),
        symbol=data.get("symbol", "Y"),
        label=data.get("label", "linear"),
    )
