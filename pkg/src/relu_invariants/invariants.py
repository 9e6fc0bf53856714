"""Construction of rank-constraint families for activation-pattern varieties.

Every constructor returns certificates (``RankConstraint`` objects) that can
be checked by :mod:`relu_invariants.verify`.  Families whose minor size
exceeds the matrix shape are vacuous and are not emitted.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from .constraints import Cell, LinearRelation, RankConstraint, Term
from .exact_linalg import RationalMatrix, kernel_basis, rank_exact
from .model import (
    Architecture,
    BlockPattern,
    Pattern,
    enumerate_active_paths,
    generic_rank_bound,
    path_indicator,
)
from .verify import SampleSpec, generic_rank

__all__ = [
    "TwoBlockStats",
    "SingleBlockResult",
    "single_block_constraints",
    "single_block_dimension",
    "pattern_rank_constraint",
    "two_block_shallow",
    "two_block_deep",
    "mixed_minor_count",
    "lin_comb_constraint",
    "deep_lin_comb_constraint",
    "search_sparse_lambdas",
    "block_matrix_constraint",
    "enumerate_layouts",
    "canonical_lambda",
    "difference_constraint",
    "SearchOptions",
    "Catalog",
    "build_catalog",
]


@dataclass(frozen=True)
class TwoBlockStats:
    r1: int
    r2: int
    s: int
    t: int
    r_a: int
    r_b: int
    n_min: int
    l_min_minus: int
    l_min_plus: int
    gate3a: bool
    gate3b: bool
    disjoint_paths: bool = False

    def __post_init__(self):
        if self.t != self.r_a + self.r_b:
            raise ValueError("t must equal r_a + r_b")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SingleBlockResult:
    linear: tuple[LinearRelation, ...]
    minors: RankConstraint | None
    counts: dict
    core_columns: tuple[int, ...]
    general_position: bool
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _clip(bound: int, rows: int, cols: int) -> int:
    return max(0, min(bound, rows, cols))


def _emit(constraint: RankConstraint, arch: Architecture, out: list, data_cols=None) -> None:
    if not constraint.is_vacuous(arch, data_cols):
        out.append(constraint)


def _general_position(x: RationalMatrix, size: int, limit: int = 5000) -> bool:
    """Every ``size`` columns independent (checks at most ``limit`` subsets)."""
    for k, cols in enumerate(itertools.combinations(range(x.ncols), size)):
        if k >= limit:
            break
        if rank_exact(x.select_columns(cols)) < size:
            return False
    return True


def _core_columns(x: RationalMatrix, size: int) -> tuple[int, ...]:
    """The last ``size`` columns if independent, else a greedy pick from the right."""
    m = x.ncols
    last = tuple(range(m - size, m))
    if rank_exact(x.select_columns(last)) == size:
        return last
    chosen: list[int] = []
    for j in reversed(range(m)):
        trial = sorted(chosen + [j])
        if rank_exact(x.select_columns(trial)) == len(trial):
            chosen = trial
        if len(chosen) == size:
            break
    return tuple(sorted(chosen))


def _selector(m: int, cols: Sequence[int]) -> RationalMatrix:
    return RationalMatrix([[int(i == c) for c in cols] for i in range(m)])


def single_block_constraints(
    arch: Architecture,
    pattern: Pattern,
    x: RationalMatrix,
    bias: bool | None = None,
    block: int = 0,
) -> SingleBlockResult:
    """Generators of the output variety when all data share one pattern.

    Without biases: one linear relation per kernel vector of ``X`` and output
    row, plus rank(Y restricted to an independent column block) <= r.  With
    biases the same on ``[1; X]`` and ``[1; Y]`` with bound r + 1.
    """
    arch.check_pattern(pattern)
    if bias is None:
        bias = arch.has_bias
    if x.nrows != arch.n_in:
        raise ValueError(f"data has {x.nrows} rows, expected {arch.n_in}")
    n0, nl, m = arch.n_in, arch.n_out, x.ncols
    r = generic_rank_bound(arch, pattern)
    notes = []
    aug = RationalMatrix.ones(1, m).vstack(x) if bias else x
    span = n0 + 1 if bias else n0
    core_size = min(span, m)
    general = _general_position(aug, core_size)
    if not general:
        msg = "data not in general position; linear relations come from the exact kernel"
        notes.append(msg)
        warnings.warn(msg, stacklevel=2)
    kernel = kernel_basis(aug)
    linear = tuple(
        LinearRelation(block, k, v, label="single-block-affine" if bias else "single-block-linear")
        for v in kernel
        for k in range(nl)
    )
    core = _core_columns(aug, min(rank_exact(aug), core_size))
    y_core = Term(block, symbol="Y", right=_selector(m, core))
    k = len(core)
    if bias:
        grid = ((Cell.ones(1, k),), (Cell((y_core,)),))
        raw = r + 1
        constraint = RankConstraint(
            grid, _clip(raw, nl + 1, k), "single-block-affine", family="single-block",
            raw_bound=raw, blocks=(block,),
        )
        generators = math.comb(nl, r + 1) * math.comb(max(k - 1, 0), r + 1)
    else:
        constraint = RankConstraint.single(
            Cell((y_core,)), _clip(r, nl, k), "single-block-linear", family="single-block",
            raw_bound=r, blocks=(block,),
        )
        generators = math.comb(nl, r + 1) * math.comb(k, r + 1)
    data_cols = [0] * block + [m]
    minors = None if constraint.is_vacuous(arch, data_cols) else constraint
    counts = {
        "rank": r,
        "linear": len(linear),
        "linear_formula": nl * max(m - span, 0),
        "minor_degree": r + 1,
        "minor_generators": generators if minors is not None else 0,
        "minor_count": minors.count(arch, data_cols) if minors is not None else 0,
    }
    return SingleBlockResult(linear, minors, counts, core, general, tuple(notes))


def single_block_dimension(arch: Architecture, pattern: Pattern, m: int, bias: bool | None = None) -> int:
    """Dimension of the single-block output variety (general-position data)."""
    if bias is None:
        bias = arch.has_bias
    n0, nl = arch.n_in, arch.n_out
    r = generic_rank_bound(arch, pattern)
    if bias:
        k = min(n0, m - 1)
        r = min(r, nl, k)
        return k * r + nl * (r + 1) - r * r
    k = min(n0, m)
    r = min(r, nl, k)
    return k * r + nl * r - r * r


def pattern_rank_constraint(arch: Architecture, pattern: Pattern, block: int = 0) -> RankConstraint:
    """rank(M_i) <= r_i for a single block of the pattern variety."""
    r = generic_rank_bound(arch, pattern)
    return RankConstraint.single(
        Cell.block(block), _clip(r, arch.n_out, arch.n_in), "single-block", family="type1",
        raw_bound=r, blocks=(block,),
    )


def mixed_minor_count(rows: int, cols1: int, cols2: int, size: int, r1: int, r2: int) -> int:
    """``size``-minors of [M1 | M2] taking at most r1 columns of M1 and r2 of M2.

    The remaining minors expand (Laplace) into (r_i + 1)-minors of a single
    block, so these are the ones that carry new information.
    """
    total = 0
    for a in range(0, size + 1):
        b = size - a
        if a <= r1 and b <= r2:
            total += math.comb(cols1, a) * math.comb(cols2, b)
    return math.comb(rows, size) * total


def _two_block_family(arch, stats: TwoBlockStats, i: int, j: int, suffix: str, shallow: bool) -> list[RankConstraint]:
    nl, n0 = arch.n_out, arch.n_in
    blocks = (i, j)
    out: list[RankConstraint] = []
    _emit(RankConstraint.single(Cell.block(i), _clip(stats.r1, nl, n0), f"type1-{suffix}",
                                family="type1", raw_bound=stats.r1, blocks=blocks), arch, out)
    _emit(RankConstraint.single(Cell.block(j), _clip(stats.r2, nl, n0), f"type2-{suffix}",
                                family="type2", raw_bound=stats.r2, blocks=blocks), arch, out)
    if stats.disjoint_paths:
        return out
    note = "n1 normalized to r1 + r2 - s" if shallow else ""
    if stats.gate3a:
        _emit(RankConstraint(((Cell.block(i), Cell.block(j)),), _clip(stats.n_min, nl, 2 * n0),
                             f"type3a-{suffix}", family="type3a", raw_bound=stats.n_min,
                             blocks=blocks, note=note), arch, out)
    if stats.gate3b:
        _emit(RankConstraint(((Cell.block(i, True), Cell.block(j, True)),), _clip(stats.n_min, n0, 2 * nl),
                             f"type3b-{suffix}", family="type3b", raw_bound=stats.n_min,
                             blocks=blocks, note=note), arch, out)
    diff = Cell((Term(i), Term(j, Fraction(-1))))
    _emit(RankConstraint.single(diff, _clip(stats.t, nl, n0), f"type4-{suffix}", family="type4",
                                raw_bound=stats.t, blocks=blocks), arch, out)
    return out


def two_block_shallow(
    arch: Architecture, a1: Pattern, a2: Pattern, blocks: tuple[int, int] = (0, 1)
) -> tuple[TwoBlockStats, list[RankConstraint]]:
    """Type 1-4 rank constraints for two blocks of a one-hidden-layer network.

    Ranks are neuron counts (r_i = |A_i|, s = |A_1 and A_2|) and bounds are
    clipped to the matrix shape.  Type 3 uses r1 + r2 - s in place of n1 so
    neurons dead in both blocks do not loosen it.  With disjoint supports the
    type 3/4 families are implied by types 1/2 and are omitted.
    """
    if arch.depth != 2:
        raise ValueError(f"two_block_shallow needs L = 2, got L = {arch.depth}")
    arch.check_pattern(a1)
    arch.check_pattern(a2)
    r1, r2 = sum(a1.layers[0]), sum(a2.layers[0])
    s = sum(a1.meet(a2).layers[0])
    stats = TwoBlockStats(
        r1=r1, r2=r2, s=s, t=r1 + r2 - 2 * s, r_a=r1 - s, r_b=r2 - s, n_min=r1 + r2 - s,
        l_min_minus=1, l_min_plus=1, gate3a=True, gate3b=True, disjoint_paths=s == 0,
    )
    return stats, _two_block_family(arch, stats, *blocks, "shallow", shallow=True)


def two_block_deep(
    arch: Architecture,
    a1: Pattern,
    a2: Pattern,
    spec: SampleSpec = SampleSpec(),
    blocks: tuple[int, int] = (0, 1),
    allow_shallow: bool = False,
) -> tuple[TwoBlockStats, list[RankConstraint]]:
    """Rank constraints for two blocks of a deep network.

    s, r_a and r_b are generic ranks of path networks (shared paths, and the
    paths private to each block), estimated by sampling with ``spec``.
    """
    if arch.depth < 3 and not (allow_shallow and arch.depth == 2):
        raise ValueError(f"two_block_deep needs L >= 3, got L = {arch.depth}")
    p1 = enumerate_active_paths(arch, a1)
    p2 = enumerate_active_paths(arch, a2)
    shared = p1.intersection(p2)
    s = generic_rank(shared, arch, spec=spec) if len(shared) else 0
    r_a = generic_rank(p1.difference(shared), arch, spec=spec) if len(p1) > len(shared) else 0
    r_b = generic_rank(p2.difference(shared), arch, spec=spec) if len(p2) > len(shared) else 0
    hidden = arch.hidden_widths
    n_min = min(hidden)
    i_min = [l for l, w in enumerate(hidden, start=1) if w == n_min]
    lo, hi = min(i_min), max(i_min)
    gate3a = all(a1.layers[l - 1] == a2.layers[l - 1] for l in range(hi + 1, arch.depth))
    gate3b = all(a1.layers[l - 1] == a2.layers[l - 1] for l in range(1, lo))
    stats = TwoBlockStats(
        r1=generic_rank_bound(arch, a1), r2=generic_rank_bound(arch, a2), s=s, t=r_a + r_b,
        r_a=r_a, r_b=r_b, n_min=n_min, l_min_minus=lo, l_min_plus=hi,
        gate3a=gate3a, gate3b=gate3b, disjoint_paths=len(shared) == 0 and _paths_disjoint(p1, p2),
    )
    return stats, _two_block_family(arch, stats, *blocks, "deep", shallow=False)


def _paths_disjoint(p1, p2) -> bool:
    """No path of one block meets a path of the other in any layer."""
    for layer in range(len(p1.paths[0]) if len(p1) else 0):
        if {p[layer] for p in p1} & {q[layer] for q in p2}:
            return False
    return True


def _pattern_vectors(arch: Architecture, patterns: BlockPattern) -> list[tuple[int, ...]]:
    """Hidden-layer indicators (shallow) or active-path indicators (deep)."""
    if arch.depth == 2:
        return [p.layers[0] for p in patterns]
    return [path_indicator(arch, p) for p in patterns]


def _combo(vectors, lam) -> tuple[int, ...]:
    return tuple(sum(l * v[h] for l, v in zip(lam, vectors)) for h in range(len(vectors[0])))


def lin_comb_constraint(arch: Architecture, patterns: BlockPattern, lam: Sequence[int]) -> RankConstraint:
    """rank(sum_i lam_i M_i) <= |supp(sum_i lam_i A_i)| for one hidden layer."""
    if arch.depth != 2:
        raise ValueError("lin_comb_constraint is for L = 2; use deep_lin_comb_constraint")
    if len(lam) != len(patterns):
        raise ValueError(f"{len(lam)} coefficients for {len(patterns)} blocks")
    support = sum(1 for v in _combo(_pattern_vectors(arch, patterns), lam) if v)
    return RankConstraint.single(
        Cell.lincomb(lam), _clip(support, arch.n_out, arch.n_in), "lincomb", family="lincomb",
        raw_bound=support, blocks=tuple(i for i, c in enumerate(lam) if c),
        note="lambda=" + ",".join(str(int(c)) for c in lam),
    )


def deep_lin_comb_constraint(arch: Architecture, patterns: BlockPattern, lam: Sequence[int]) -> RankConstraint:
    """The same bound with supports taken over active paths instead of neurons."""
    if len(lam) != len(patterns):
        raise ValueError(f"{len(lam)} coefficients for {len(patterns)} blocks")
    vectors = [path_indicator(arch, p) for p in patterns]
    support = sum(1 for v in _combo(vectors, lam) if v)
    return RankConstraint.single(
        Cell.lincomb(lam), _clip(support, arch.n_out, arch.n_in), "lincomb-deep", family="lincomb",
        raw_bound=support, blocks=tuple(i for i, c in enumerate(lam) if c),
        note="lambda=" + ",".join(str(int(c)) for c in lam),
    )


def canonical_lambda(lam: Sequence[int]) -> tuple[int, ...]:
    """Divide by the gcd and make the first nonzero entry positive."""
    g = 0
    for c in lam:
        g = math.gcd(g, int(c))
    if g == 0:
        return tuple(int(c) for c in lam)
    out = [int(c) // g for c in lam]
    if next(c for c in out if c) < 0:
        out = [-c for c in out]
    return tuple(out)


def search_sparse_lambdas(
    arch: Architecture,
    patterns: BlockPattern,
    coeff_bound: int = 2,
    max_support: int | None = None,
) -> list[tuple[int, ...]]:
    """Heuristic search for coefficient vectors with support-minimal combinations.

    Scans the box [-coeff_bound, coeff_bound]^k, canonicalizes up to scaling,
    and keeps a lambda when its support set has size <= ``max_support`` and
    no other kept candidate has a nonempty support strictly inside it.
    Combinations with empty support (exact linear identities) are kept too.
    """
    k = len(patterns)
    if max_support is None:
        max_support = arch.widths[1]
    vectors = _pattern_vectors(arch, patterns)
    supports: dict[tuple[int, ...], frozenset[int]] = {}
    for lam in itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=k):
        if not any(lam):
            continue
        lam = canonical_lambda(lam)
        if lam in supports:
            continue
        supp = frozenset(h for h, v in enumerate(_combo(vectors, lam)) if v)
        if len(supp) <= max_support:
            supports[lam] = supp
    nonempty = {s for s in supports.values() if s}
    kept = [
        lam for lam, supp in supports.items()
        if not supp or not any(other < supp for other in nonempty)
    ]
    kept.sort(key=lambda lam: (len(supports[lam]), sum(1 for c in lam if c), tuple(-c for c in lam)))
    return kept


def _check_distinct(layout: Sequence[Sequence[int]]) -> None:
    cells = [(r, c, v) for r, row in enumerate(layout) for c, v in enumerate(row)]
    for (r1, c1, v1), (r2, c2, v2) in itertools.combinations(cells, 2):
        if r1 != r2 and c1 != c2 and v1 == v2:
            raise ValueError(
                f"layout repeats entry {v1} at ({r1}, {c1}) and ({r2}, {c2}) in different rows and columns"
            )


def block_matrix_constraint(
    arch: Architecture,
    patterns: BlockPattern,
    lam_list: Sequence[Sequence[int]],
    layout: Sequence[Sequence[int]],
) -> RankConstraint:
    """Rank bound for a block matrix whose cells are linear combinations T_j.

    With t_j the support of the j-th combination, the bound is the number of
    neurons shared by all used T_j with equal coefficients, plus the sizes of
    each t_j outside that shared set.
    """
    if arch.depth != 2:
        raise ValueError("block_matrix_constraint is for L = 2")
    layout = [list(row) for row in layout]
    if not layout or not layout[0] or any(len(r) != len(layout[0]) for r in layout):
        raise ValueError("layout must be a non-empty rectangle")
    _check_distinct(layout)
    used = sorted({v for row in layout for v in row})
    vectors = _pattern_vectors(arch, patterns)
    combos = {j: _combo(vectors, lam_list[j]) for j in used}
    n1 = arch.widths[1]
    common = {h for h in range(n1) if combos[used[0]][h] and len({combos[j][h] for j in used}) == 1}
    t = len(common) + sum(sum(1 for h in range(n1) if combos[j][h] and h not in common) for j in used)
    rows, cols = len(layout) * arch.n_out, len(layout[0]) * arch.n_in
    grid = tuple(tuple(Cell.lincomb(lam_list[v]) for v in row) for row in layout)
    return RankConstraint(
        grid, _clip(t, rows, cols), "block-T", family="block-T", raw_bound=t,
        blocks=tuple(sorted({i for j in used for i, c in enumerate(lam_list[j]) if c})),
        note="layout=" + ";".join(",".join(str(v) for v in row) for row in layout),
    )


def _canonical_layout(layout: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    best = None
    rows = len(layout)
    cols = len(layout[0])
    for rp in itertools.permutations(range(rows)):
        for cp in itertools.permutations(range(cols)):
            cand = tuple(tuple(layout[r][c] for c in cp) for r in rp)
            if best is None or cand < best:
                best = cand
    return best


def enumerate_layouts(n: int, max_rows: int = 2, max_cols: int = 2) -> list[tuple[tuple[int, ...], ...]]:
    """Layouts over ``n`` combinations, up to row/column permutation.

    Only grids with at least two cells, at least two distinct entries and the
    distinctness property are returned.
    """
    out = set()
    for a in range(1, max_rows + 1):
        for b in range(1, max_cols + 1):
            if a * b < 2:
                continue
            for flat in itertools.product(range(n), repeat=a * b):
                if len(set(flat)) < 2:
                    continue
                layout = tuple(tuple(flat[r * b:(r + 1) * b]) for r in range(a))
                try:
                    _check_distinct(layout)
                except ValueError:
                    continue
                out.add(_canonical_layout(layout))
    return sorted(out, key=lambda g: (len(g) * len(g[0]), len(g), g))


def difference_constraint(arch: Architecture, stats: TwoBlockStats, blocks: tuple[int, int] = (0, 1)) -> RankConstraint:
    """rank(M_i - M_j) <= t, emitted even when the minor family is empty.

    Used to compare the provable bound with the observed generic rank.
    """
    i, j = blocks
    diff = Cell((Term(i), Term(j, Fraction(-1))))
    return RankConstraint.single(diff, stats.t, "difference-rank", family="type4",
                                 raw_bound=stats.t, blocks=blocks)


@dataclass(frozen=True)
class SearchOptions:
    lambda_coeff_bound: int = 2
    max_support: int | None = None
    layout_max_rows: int = 2
    layout_max_cols: int = 2
    layout_lambdas: str = "units"
    layouts: bool = True

    def __post_init__(self):
        if self.lambda_coeff_bound < 1:
            raise ValueError("lambda_coeff_bound must be at least 1")
        if self.layout_lambdas not in ("units", "searched"):
            raise ValueError("layout_lambdas must be 'units' or 'searched'")
        if self.layout_max_rows < 1 or self.layout_max_cols < 1:
            raise ValueError("layout limits must be positive")


@dataclass
class Catalog:
    constraints: list[RankConstraint]
    pair_stats: dict[tuple[int, int], TwoBlockStats] = field(default_factory=dict)
    lambdas: list[tuple[int, ...]] = field(default_factory=list)
    diagnostics: list[RankConstraint] = field(default_factory=list)


def build_catalog(
    arch: Architecture,
    patterns: BlockPattern,
    spec: SampleSpec = SampleSpec(),
    options: SearchOptions = SearchOptions(),
) -> Catalog:
    """Every non-vacuous constraint family for a block pattern, deduplicated.

    One block gives the rank bound on M_1; two blocks the type 1-4 families;
    three or more give the lambda families, pairwise type 3 families and,
    for one hidden layer, block-matrix layouts.
    """
    k = len(patterns)
    shallow = arch.depth == 2
    cat = Catalog([])
    found: list[RankConstraint] = []
    if k == 1:
        _emit(pattern_rank_constraint(arch, patterns[0]), arch, found)
    pairs = list(itertools.combinations(range(k), 2))
    for i, j in pairs:
        if shallow:
            stats, cs = two_block_shallow(arch, patterns[i], patterns[j], blocks=(i, j))
        else:
            stats, cs = two_block_deep(arch, patterns[i], patterns[j], spec, blocks=(i, j))
        cat.pair_stats[(i, j)] = stats
        cat.diagnostics.append(difference_constraint(arch, stats, (i, j)))
        if k == 2:
            found.extend(cs)
        else:
            found.extend(c for c in cs if c.family in ("type3a", "type3b"))
    if k >= 3:
        cat.lambdas = search_sparse_lambdas(arch, patterns, options.lambda_coeff_bound, options.max_support)
        make = lin_comb_constraint if shallow else deep_lin_comb_constraint
        for lam in cat.lambdas:
            _emit(make(arch, patterns, lam), arch, found)
        if shallow and options.layouts:
            if options.layout_lambdas == "units":
                lams = [tuple(int(a == b) for b in range(k)) for a in range(k)]
            else:
                lams = [lam for lam in cat.lambdas if any(lam)]
            for layout in enumerate_layouts(len(lams), options.layout_max_rows, options.layout_max_cols):
                _emit(block_matrix_constraint(arch, patterns, lams, layout), arch, found)
    seen = set()
    for c in found:
        key = (c.describe(), c.note)
        if key not in seen:
            seen.add(key)
            cat.constraints.append(c)
    return cat
