"""Randomized-exact verification of rank constraints and polynomial identities.

Parameters are sampled as integer matrices with entries uniform in
``[-B, B]``; each sample is a deterministic function of
``(master_seed, index)``.  A rank bound fails if it is exceeded on *any*
sample, so a reported violation is a genuine counterexample.  Generic ranks
are estimated as the maximum exact rank over the samples.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .constraints import Cell, LinearRelation, RankConstraint
from .exact_linalg import RationalMatrix, rank_exact
from .model import (
    Architecture,
    BlockPattern,
    ParamAssignment,
    PathSet,
    masked_matrix,
    path_matrix,
)
from .poly import Polynomial

__all__ = [
    "DEFAULT_SEED",
    "SampleSpec",
    "Verdict",
    "SymbolValues",
    "sample_params",
    "eval_constraint_matrix",
    "check_constraint",
    "check_constraints",
    "generic_rank",
    "check_vanishing",
]

DEFAULT_SEED = 1729


@dataclass(frozen=True)
class SampleSpec:
    master_seed: int = DEFAULT_SEED
    num_samples: int = 8
    coeff_bound: int = 100

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if self.coeff_bound < 1:
            raise ValueError("coeff_bound must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Verdict:
    holds: bool
    max_rank_observed: int
    bound: int
    tight: bool
    samples_used: int
    violations: int
    first_violation_seed: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


def sample_params(arch: Architecture, spec: SampleSpec, index: int) -> ParamAssignment:
    if not 0 <= index < spec.num_samples:
        raise IndexError(f"sample index {index} outside 0..{spec.num_samples - 1}")
    rng = random.Random(f"relu-invariants/{spec.master_seed}/{index}")
    bnd = spec.coeff_bound
    weights = []
    for l in range(1, arch.depth + 1):
        rows, cols = arch.widths[l], arch.widths[l - 1]
        weights.append(RationalMatrix([[rng.randint(-bnd, bnd) for _ in range(cols)] for _ in range(rows)]))
    biases = None
    if arch.has_bias:
        biases = tuple(tuple(rng.randint(-bnd, bnd) for _ in range(w)) for w in arch.widths[1:])
    return ParamAssignment(tuple(weights), biases)


class SymbolValues:
    """Lazily computed symbol matrices (M_i, b_i, Y_i) at one parameter."""

    def __init__(
        self,
        arch: Architecture,
        patterns: BlockPattern,
        theta: ParamAssignment,
        x_blocks: Sequence[RationalMatrix] | None = None,
    ):
        self.arch = arch
        self.patterns = patterns
        self.theta = theta
        self.x_blocks = x_blocks
        self._masked: dict[int, tuple] = {}
        self._cache: dict[tuple[str, int], RationalMatrix] = {}

    def _mb(self, block: int):
        if block not in self._masked:
            if block >= len(self.patterns):
                raise ValueError(f"constraint references block {block + 1}, only {len(self.patterns)} given")
            self._masked[block] = masked_matrix(self.arch, self.theta, self.patterns[block])
        return self._masked[block]

    def get(self, symbol: str, block: int) -> RationalMatrix:
        key = (symbol, block)
        if key not in self._cache:
            m, b = self._mb(block)
            if symbol == "M":
                val = m
            elif symbol == "b":
                val = RationalMatrix.column(b)
            elif symbol == "Y":
                if self.x_blocks is None or block >= len(self.x_blocks):
                    raise ValueError(f"Y{block + 1} needs a data block")
                x = self.x_blocks[block]
                val = m @ x
                if self.arch.has_bias:
                    val = val + RationalMatrix.column(b) @ RationalMatrix.ones(1, x.ncols)
            else:
                raise ValueError(f"unknown symbol {symbol!r}")
            self._cache[key] = val
        return self._cache[key]

    def entry(self, var) -> Fraction:
        symbol, block, row, col = var
        return self.get(symbol, block)[row, col]

    @property
    def data_cols(self):
        return None if self.x_blocks is None else [x.ncols for x in self.x_blocks]


def _eval_cell(cell: Cell, values: SymbolValues) -> RationalMatrix:
    if cell.kind == "zero":
        return RationalMatrix.zeros(*cell.fixed_shape)
    if cell.kind == "ones":
        return RationalMatrix.ones(*cell.fixed_shape)
    total = None
    for t in cell.terms:
        m = values.get(t.symbol, t.block)
        if t.transpose:
            m = m.T
        if t.left is not None:
            m = t.left @ m
        if t.right is not None:
            m = m @ t.right
        if t.coef != 1:
            m = m.scale(t.coef)
        total = m if total is None else total + m
    return total


def _assemble(c: RankConstraint, values: SymbolValues) -> RationalMatrix:
    # validates the grid shape before any arithmetic
    c.block_shape(values.arch, values.data_cols)
    block_rows = []
    for row in c.grid:
        parts = [_eval_cell(cell, values) for cell in row]
        block_rows.append(parts[0].hstack(*parts[1:]))
    return block_rows[0].vstack(*block_rows[1:])


def eval_constraint_matrix(
    c: RankConstraint,
    arch: Architecture,
    patterns: BlockPattern,
    theta: ParamAssignment,
    x_blocks: Sequence[RationalMatrix] | None = None,
) -> RationalMatrix:
    """Substitute the block matrices at ``theta`` into the constraint's grid."""
    return _assemble(c, SymbolValues(arch, patterns, theta, x_blocks))


def check_constraints(
    constraints: Sequence[RankConstraint],
    arch: Architecture,
    patterns: BlockPattern,
    spec: SampleSpec = SampleSpec(),
    x_blocks: Sequence[RationalMatrix] | None = None,
) -> list[Verdict]:
    """Check many constraints, sharing the per-sample block matrices."""
    max_rank = [0] * len(constraints)
    violations = [0] * len(constraints)
    first: list[int | None] = [None] * len(constraints)
    for index in range(spec.num_samples):
        values = SymbolValues(arch, patterns, sample_params(arch, spec, index), x_blocks)
        for k, c in enumerate(constraints):
            rank = rank_exact(_assemble(c, values))
            max_rank[k] = max(max_rank[k], rank)
            if rank > c.bound:
                violations[k] += 1
                if first[k] is None:
                    first[k] = index
    return [
        Verdict(
            holds=violations[k] == 0,
            max_rank_observed=max_rank[k],
            bound=c.bound,
            tight=max_rank[k] == c.bound,
            samples_used=spec.num_samples,
            violations=violations[k],
            first_violation_seed=first[k],
        )
        for k, c in enumerate(constraints)
    ]


def check_constraint(
    c: RankConstraint,
    arch: Architecture,
    patterns: BlockPattern,
    spec: SampleSpec = SampleSpec(),
    x_blocks: Sequence[RationalMatrix] | None = None,
) -> Verdict:
    return check_constraints([c], arch, patterns, spec, x_blocks)[0]


def generic_rank(
    expr: Union[Cell, RankConstraint, PathSet],
    arch: Architecture,
    patterns: BlockPattern | None = None,
    spec: SampleSpec = SampleSpec(),
    x_blocks: Sequence[RationalMatrix] | None = None,
) -> int:
    """Maximum exact rank of ``expr`` over the samples."""
    if isinstance(expr, Cell):
        expr = RankConstraint.single(expr, 0, "probe")
    best = 0
    for index in range(spec.num_samples):
        theta = sample_params(arch, spec, index)
        if isinstance(expr, PathSet):
            rank = rank_exact(path_matrix(arch, theta, expr))
        else:
            rank = rank_exact(_assemble(expr, SymbolValues(arch, patterns, theta, x_blocks)))
        best = max(best, rank)
    return best


def check_vanishing(
    relations: Union[Polynomial, LinearRelation, Iterable[Union[Polynomial, LinearRelation]]],
    arch: Architecture,
    patterns: BlockPattern,
    x_blocks: Sequence[RationalMatrix] | None,
    spec: SampleSpec = SampleSpec(),
) -> Verdict:
    """Evaluate relations at sampled outputs and require exact zeros.

    In the returned verdict ``bound`` is 0 and ``max_rank_observed`` is 1 when
    some relation failed to vanish on some sample.
    """
    if isinstance(relations, (Polynomial, LinearRelation)):
        relations = [relations]
    relations = list(relations)
    violations = 0
    first = None
    for index in range(spec.num_samples):
        values = SymbolValues(arch, patterns, sample_params(arch, spec, index), x_blocks)
        bad = False
        for rel in relations:
            if isinstance(rel, LinearRelation):
                val = rel.evaluate(values.get(rel.symbol, rel.block))
            else:
                val = rel.evaluate(values.entry)
            if val:
                bad = True
                break
        if bad:
            violations += 1
            if first is None:
                first = index
    return Verdict(
        holds=violations == 0,
        max_rank_observed=int(violations > 0),
        bound=0,
        tight=violations == 0,
        samples_used=spec.num_samples,
        violations=violations,
        first_violation_seed=first,
    )
