"""Carry pattern-variety constraints over to the outputs on a fixed dataset.

With ``Y_i = M_i X_i`` and ``X_i`` invertible, substituting ``M_i = Y_i X_i^-1``
turns every rank constraint on the M-blocks into one on the Y-blocks with the
same bound.  Blocks with more than n_0 columns use an invertible core of
columns; the remaining columns are tied to the core by linear relations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .constraints import Cell, LinearRelation, RankConstraint
from .exact_linalg import RationalMatrix, invert, kernel_basis, rank_exact

__all__ = [
    "INVERTIBLE",
    "OVERSIZED",
    "DEFICIENT",
    "UNDERSIZED",
    "DatasetBlocks",
    "classify_blocks",
    "psi_inverse",
    "psi_forward",
    "dependency_rows",
]

INVERTIBLE = "invertible"
OVERSIZED = "oversized"
DEFICIENT = "deficient"
UNDERSIZED = "undersized"


@dataclass(frozen=True)
class DatasetBlocks:
    """Data blocks X_i (n_0 x m_i) and, once classified, their status and core columns."""

    blocks: tuple[RationalMatrix, ...]
    status: tuple[str, ...] | None = None
    cores: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, RationalMatrix) else RationalMatrix(b) for b in self.blocks)
        if not blocks:
            raise ValueError("at least one data block is required")
        if len({b.nrows for b in blocks}) != 1:
            raise ValueError("all data blocks must have the same number of rows")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_in(self) -> int:
        return self.blocks[0].nrows

    def to_json(self) -> dict:
        return {
            "blocks": [b.to_strings() for b in self.blocks],
            "status": list(self.status) if self.status else None,
            "cores": [list(c) for c in self.cores] if self.cores else None,
        }


def _earliest_basis(x: RationalMatrix) -> tuple[int, ...]:
    chosen: list[int] = []
    for j in range(x.ncols):
        if rank_exact(x.select_columns(chosen + [j])) == len(chosen) + 1:
            chosen.append(j)
        if len(chosen) == x.nrows:
            break
    return tuple(chosen)


def classify_blocks(data: DatasetBlocks) -> DatasetBlocks:
    """Mark each block invertible, oversized (with a core), undersized or deficient.

    Undersized blocks (fewer than n_0 independent columns) and deficient ones
    (rank below min(m_i, n_0)) cannot be transformed.
    """
    status, cores = [], []
    n0 = data.n_in
    for x in data.blocks:
        rank = rank_exact(x)
        if rank < min(x.ncols, n0):
            status.append(DEFICIENT)
            cores.append(())
        elif x.ncols < n0:
            status.append(UNDERSIZED)
            cores.append(())
        elif x.ncols == n0:
            status.append(INVERTIBLE)
            cores.append(tuple(range(n0)))
        else:
            status.append(OVERSIZED)
            cores.append(_earliest_basis(x))
    return replace(data, status=tuple(status), cores=tuple(cores))


def _core_factors(data: DatasetBlocks, block: int) -> tuple[RationalMatrix, RationalMatrix]:
    """(S X_core^-1, X_core) where S selects the core columns of Y_block."""
    if block >= len(data.blocks):
        raise ValueError(f"constraint references block {block + 1}, dataset has {len(data.blocks)}")
    status = data.status[block]
    if status not in (INVERTIBLE, OVERSIZED):
        raise ValueError(
            f"block {block + 1} is {status}: its columns do not contain n_0 independent points, "
            "so the substitution M = Y X^-1 is not available"
        )
    x = data.blocks[block]
    core = data.cores[block]
    x_core = x.select_columns(core)
    select = RationalMatrix([[int(i == c) for c in core] for i in range(x.ncols)])
    return select @ invert(x_core), x_core


def psi_inverse(c: RankConstraint, data: DatasetBlocks) -> RankConstraint:
    """Substitute ``M_i = Y_i S_i X_i^-1`` in every term; the bound is unchanged."""
    if data.status is None:
        data = classify_blocks(data)
    cells = []
    for row in c.grid:
        new_row = []
        for cell in row:
            if cell.kind != "sum":
                new_row.append(cell)
                continue
            terms = []
            for t in cell.terms:
                if t.symbol == "Y":
                    terms.append(t)
                    continue
                if t.symbol != "M":
                    raise ValueError("offset terms cannot be transformed; the substitution assumes no biases")
                right_inv, _ = _core_factors(data, t.block)
                if t.transpose:
                    left = right_inv.T if t.left is None else t.left @ right_inv.T
                    terms.append(replace(t, symbol="Y", left=left))
                else:
                    right = right_inv if t.right is None else right_inv @ t.right
                    terms.append(replace(t, symbol="Y", right=right))
            new_row.append(Cell(tuple(terms)))
        cells.append(tuple(new_row))
    return replace(c, grid=tuple(cells), label=c.label + "-psi", note=_core_note(c, data))


def _core_note(c: RankConstraint, data: DatasetBlocks) -> str:
    used = sorted({t.block for row in c.grid for cell in row for t in cell.terms if t.symbol == "M"})
    parts = [f"X{b + 1} core columns " + ",".join(str(j + 1) for j in data.cores[b]) for b in used
             if data.status[b] == OVERSIZED]
    return "; ".join(filter(None, [c.note] + parts))


def psi_forward(c: RankConstraint, data: DatasetBlocks) -> RankConstraint:
    """Substitute ``Y_i = M_i X_i`` in every term (the map psi)."""
    cells = []
    for row in c.grid:
        new_row = []
        for cell in row:
            if cell.kind != "sum":
                new_row.append(cell)
                continue
            terms = []
            for t in cell.terms:
                if t.symbol != "Y":
                    terms.append(t)
                    continue
                x = data.blocks[t.block]
                if t.transpose:
                    left = x.T if t.left is None else t.left @ x.T
                    terms.append(replace(t, symbol="M", left=left))
                else:
                    right = x if t.right is None else x @ t.right
                    terms.append(replace(t, symbol="M", right=right))
            new_row.append(Cell(tuple(terms)))
        cells.append(tuple(new_row))
    return replace(c, grid=tuple(cells))


def dependency_rows(x: RationalMatrix, n_out: int, bias: bool = False, block: int = 0) -> list[LinearRelation]:
    """One relation per kernel vector of X (or of [1; X]) and output row."""
    aug = RationalMatrix.ones(1, x.ncols).vstack(x) if bias else x
    return [
        LinearRelation(block, k, v, label="dependency")
        for v in kernel_basis(aug)
        for k in range(n_out)
    ]
