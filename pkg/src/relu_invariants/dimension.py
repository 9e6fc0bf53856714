"""Functional dimension via the exact Jacobian of θ ↦ [M_1(θ) | ... | M_k(θ)].

Rows of the Jacobian index the weights, layer by layer, each ``W^(l)`` in
row-major order.  Columns index the entries of ``M_1``, then ``M_2``, ...,
each block column by column (entry ``(i, j)`` of a block sits at offset
``j * n_L + i``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .exact_linalg import RationalMatrix, rank_exact
from .model import Architecture, BlockPattern, ParamAssignment, Pattern
from .verify import SampleSpec, sample_params

__all__ = [
    "DimensionReport",
    "jacobian",
    "functional_dimension",
    "expected_dimension_two_block",
    "expected_dimension_multi_block",
    "dimension_bounds",
    "neuron_classes",
    "jacobian_row_groups",
    "weight_row_index",
]


@dataclass(frozen=True)
class DimensionReport:
    jacobian_rank: int
    ambient_dim: int
    param_dim: int
    samples_used: int
    expected: int | None = None
    lower_bound: int | None = None
    upper_bound: int | None = None
    agrees: bool | None = None

    def to_json(self) -> dict:
        return asdict(self)


def weight_row_index(arch: Architecture, layer: int, a: int, b: int) -> int:
    """Jacobian row of the weight ``w^(layer)_{ab}`` (1-based layer, 0-based a, b)."""
    offset = sum(arch.widths[l] * arch.widths[l - 1] for l in range(1, layer))
    return offset + a * arch.widths[layer - 1] + b


def _partials(arch: Architecture, theta: ParamAssignment, pattern: Pattern):
    """Left and right partial products for every layer, masks included.

    ``left[l]`` is W^L D_{L-1} ... W^{l+1} D_l (n_L x n_l) and ``right[l]`` is
    D_{l-1} W^{l-1} ... D_1 W^1 (n_{l-1} x n_0); the derivative of M by
    ``w^(l)_{ab}`` is ``left[l][:, a] right[l][b, :]``.
    """
    L = arch.depth
    masks = [None] + [RationalMatrix.diag(layer) for layer in pattern.layers]
    right = {1: RationalMatrix.identity(arch.n_in)}
    for l in range(2, L + 1):
        right[l] = masks[l - 1] @ (theta.weights[l - 2] @ right[l - 1])
    left = {L: RationalMatrix.identity(arch.n_out)}
    for l in range(L - 1, 0, -1):
        left[l] = (left[l + 1] @ theta.weights[l]) @ masks[l]
    return left, right


def jacobian(arch: Architecture, patterns: BlockPattern, theta: ParamAssignment) -> RationalMatrix:
    if arch.has_bias:
        raise ValueError("dimension analysis covers networks without biases")
    arch.check_params(theta)
    n0, nl = arch.n_in, arch.n_out
    block_size = n0 * nl
    rows = [[Fraction(0)] * (block_size * len(patterns)) for _ in range(arch.num_weights)]
    for k, pattern in enumerate(patterns):
        arch.check_pattern(pattern)
        left, right = _partials(arch, theta, pattern)
        base = k * block_size
        for l in range(1, arch.depth + 1):
            lc = left[l].columns()
            rr = right[l].rows
            for a in range(arch.widths[l]):
                col = lc[a]
                if not any(col):
                    continue
                for b in range(arch.widths[l - 1]):
                    row_vec = rr[b]
                    if not any(row_vec):
                        continue
                    target = rows[weight_row_index(arch, l, a, b)]
                    for j in range(n0):
                        if row_vec[j]:
                            for i in range(nl):
                                if col[i]:
                                    target[base + j * nl + i] = col[i] * row_vec[j]
    return RationalMatrix(rows, block_size * len(patterns))


def _shallow_stats(a1: Pattern, a2: Pattern) -> tuple[int, int, int]:
    r1, r2 = sum(a1.layers[0]), sum(a2.layers[0])
    return r1, r2, sum(a1.meet(a2).layers[0])


def expected_dimension_two_block(arch: Architecture, a1: Pattern, a2: Pattern) -> tuple[int, int, int, int]:
    """(d_a, d_b, d_c, expected) for a one-hidden-layer network."""
    if arch.depth != 2:
        raise ValueError("expected dimension formulas are for L = 2")
    n0, n2 = arch.n_in, arch.n_out
    r1, r2, s = _shallow_stats(a1, a2)
    d = lambda r: r * (n0 + n2) - r * r
    da, db, dc = d(r1 - s), d(r2 - s), d(s)
    return da, db, dc, min(da + db + dc, 2 * n0 * n2)


def neuron_classes(patterns: BlockPattern) -> dict[frozenset[int], list[int]]:
    """Hidden neurons grouped by the exact set of blocks they are active in.

    Neurons active in no block are left out.
    """
    out: dict[frozenset[int], list[int]] = {}
    for h in range(len(patterns[0].layers[0])):
        members = frozenset(i for i, p in enumerate(patterns) if p.layers[0][h])
        if members:
            out.setdefault(members, []).append(h)
    return dict(sorted(out.items(), key=lambda kv: (kv[1][0], sorted(kv[0]))))


def expected_dimension_multi_block(arch: Architecture, patterns: BlockPattern) -> int:
    """Live neurons times (n_0 + n_2), minus the squared class sizes."""
    if arch.depth != 2:
        raise ValueError("expected dimension formulas are for L = 2")
    classes = neuron_classes(patterns)
    live = sum(len(v) for v in classes.values())
    value = live * (arch.n_in + arch.n_out) - sum(len(v) ** 2 for v in classes.values())
    return min(value, len(patterns) * arch.n_in * arch.n_out)


def dimension_bounds(arch: Architecture, a1: Pattern, a2: Pattern) -> tuple[int, int]:
    """Lower and upper bounds on the two-block dimension."""
    n0, n2 = arch.n_in, arch.n_out
    da, db, dc, upper = expected_dimension_two_block(arch, a1, a2)
    r1, r2, _ = _shallow_stats(a1, a2)
    lower = max(r1 * (n0 + n2) - r1 * r1 + db, r2 * (n0 + n2) - r2 * r2 + da)
    return min(lower, upper), upper


def jacobian_row_groups(
    arch: Architecture, patterns: BlockPattern, theta: ParamAssignment
) -> list[dict]:
    """Rank of the Jacobian rows belonging to each neuron class (L = 2)."""
    if arch.depth != 2:
        raise ValueError("row groups are defined for L = 2")
    jac = jacobian(arch, patterns, theta)
    n0, n1, n2 = arch.widths
    groups = []
    for members, neurons in neuron_classes(patterns).items():
        rows = []
        for h in neurons:
            rows += [weight_row_index(arch, 1, h, b) for b in range(n0)]
            rows += [weight_row_index(arch, 2, a, h) for a in range(n2)]
        sub = jac.submatrix(sorted(rows), range(jac.ncols))
        groups.append({
            "blocks": sorted(i + 1 for i in members),
            "neurons": [h + 1 for h in neurons],
            "rows": len(rows),
            "rank": rank_exact(sub),
        })
    return groups


def functional_dimension(
    arch: Architecture, patterns: BlockPattern, spec: SampleSpec = SampleSpec()
) -> DimensionReport:
    """Maximum exact Jacobian rank over the samples, with the closed forms for L = 2."""
    best = 0
    for index in range(spec.num_samples):
        best = max(best, rank_exact(jacobian(arch, patterns, sample_params(arch, spec, index))))
    ambient = len(patterns) * arch.n_in * arch.n_out
    expected = lower = upper = None
    if arch.depth == 2:
        if len(patterns) == 2:
            expected = expected_dimension_two_block(arch, patterns[0], patterns[1])[3]
            lower, upper = dimension_bounds(arch, patterns[0], patterns[1])
        else:
            expected = expected_dimension_multi_block(arch, patterns)
    return DimensionReport(
        jacobian_rank=best,
        ambient_dim=ambient,
        param_dim=arch.num_weights,
        samples_used=spec.num_samples,
        expected=expected,
        lower_bound=lower,
        upper_bound=upper,
        agrees=None if expected is None else best == expected,
    )
