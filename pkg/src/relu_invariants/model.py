"""Architectures, activation patterns, parameters and the masked network map.

Indices are 0-based throughout: hidden layer ``l`` (1..L-1) is stored at
``pattern.layers[l - 1]`` and a path is a tuple of neuron indices, one per
hidden layer.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact_linalg import RationalMatrix, parse_rational

__all__ = [
    "Architecture",
    "Pattern",
    "BlockPattern",
    "ParamAssignment",
    "PathSet",
    "forward_eval",
    "masked_matrix",
    "enumerate_active_paths",
    "path_matrix",
    "effective_widths",
    "generic_rank_bound",
    "block_output",
    "all_paths",
    "path_indicator",
]


@dataclass(frozen=True)
class Architecture:
    widths: tuple[int, ...]
    has_bias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("an architecture needs at least input and output widths")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be positive, got {self.widths}")

    @property
    def depth(self) -> int:
        """Number of affine layers L."""
        return len(self.widths) - 1

    @property
    def n_in(self) -> int:
        return self.widths[0]

    @property
    def n_out(self) -> int:
        return self.widths[-1]

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return self.widths[1:-1]

    @property
    def num_relus(self) -> int:
        return sum(self.hidden_widths)

    @property
    def num_weights(self) -> int:
        return sum(a * b for a, b in zip(self.widths[1:], self.widths[:-1]))

    @property
    def param_dim(self) -> int:
        """d_par: weights plus biases when the network has them."""
        return self.num_weights + (sum(self.widths[1:]) if self.has_bias else 0)

    def check_pattern(self, pattern: "Pattern") -> None:
        if tuple(len(a) for a in pattern.layers) != self.hidden_widths:
            raise ValueError(
                f"pattern layer sizes {[len(a) for a in pattern.layers]} "
                f"do not match hidden widths {list(self.hidden_widths)}"
            )

    def check_params(self, theta: "ParamAssignment") -> None:
        if len(theta.weights) != self.depth:
            raise ValueError(f"expected {self.depth} weight matrices, got {len(theta.weights)}")
        for l, w in enumerate(theta.weights, start=1):
            want = (self.widths[l], self.widths[l - 1])
            if w.shape != want:
                raise ValueError(f"W^({l}) has shape {w.shape}, expected {want}")
        if self.has_bias != (theta.biases is not None):
            raise ValueError("biases must be present exactly when the architecture has them")
        if theta.biases is not None:
            if len(theta.biases) != self.depth:
                raise ValueError(f"expected {self.depth} bias vectors")
            for l, b in enumerate(theta.biases, start=1):
                if len(b) != self.widths[l]:
                    raise ValueError(f"b^({l}) has length {len(b)}, expected {self.widths[l]}")


@dataclass(frozen=True)
class Pattern:
    layers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        layers = tuple(tuple(int(v) for v in layer) for layer in self.layers)
        if any(v not in (0, 1) for layer in layers for v in layer):
            raise ValueError("pattern entries must be 0 or 1")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def all_ones(cls, arch: Architecture) -> "Pattern":
        return cls(tuple((1,) * w for w in arch.hidden_widths))

    def counts(self) -> tuple[int, ...]:
        return tuple(sum(layer) for layer in self.layers)

    def support(self, layer: int = 0) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.layers[layer]) if v)

    def meet(self, other: "Pattern") -> "Pattern":
        """Elementwise AND."""
        return Pattern(tuple(tuple(a & b for a, b in zip(x, y)) for x, y in zip(self.layers, other.layers)))

    def flat(self) -> tuple[int, ...]:
        return tuple(itertools.chain.from_iterable(self.layers))

    def pattern_id(self) -> str:
        """Stable content hash, independent of the order patterns were seen."""
        text = "|".join("".join(str(v) for v in layer) for layer in self.layers)
        return hashlib.sha1(text.encode()).hexdigest()[:12]

    def to_lists(self) -> list[list[int]]:
        return [list(layer) for layer in self.layers]


@dataclass(frozen=True)
class BlockPattern:
    blocks: tuple[Pattern, ...]
    multiplicities: tuple[int, ...] | None = None

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("a block pattern needs at least one block")
        if len(set(blocks)) != len(blocks):
            raise ValueError("block patterns must be pairwise distinct")
        if self.multiplicities is not None:
            mult = tuple(int(m) for m in self.multiplicities)
            if len(mult) != len(blocks) or any(m < 1 for m in mult):
                raise ValueError("multiplicities must be positive, one per block")
            object.__setattr__(self, "multiplicities", mult)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, i: int) -> Pattern:
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class ParamAssignment:
    weights: tuple[RationalMatrix, ...]
    biases: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "weights",
            tuple(w if isinstance(w, RationalMatrix) else RationalMatrix(w) for w in self.weights),
        )
        if self.biases is not None:
            object.__setattr__(
                self, "biases", tuple(tuple(parse_rational(v) for v in b) for b in self.biases)
            )

    def scaled_layer(self, layer: int, alpha) -> "ParamAssignment":
        """Copy with W^(layer) multiplied by ``alpha`` (1-based layer)."""
        weights = list(self.weights)
        weights[layer - 1] = weights[layer - 1].scale(alpha)
        return ParamAssignment(tuple(weights), self.biases)


@dataclass(frozen=True)
class PathSet:
    paths: tuple[tuple[int, ...], ...] = field(default_factory=tuple)

    def __post_init__(self):
        paths = tuple(sorted(set(tuple(int(v) for v in p) for p in self.paths)))
        object.__setattr__(self, "paths", paths)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __contains__(self, p) -> bool:
        return tuple(p) in set(self.paths)

    def difference(self, other: "PathSet") -> "PathSet":
        drop = set(other.paths)
        return PathSet(tuple(p for p in self.paths if p not in drop))

    def intersection(self, other: "PathSet") -> "PathSet":
        keep = set(other.paths)
        return PathSet(tuple(p for p in self.paths if p in keep))

    def check(self, arch: Architecture) -> None:
        hidden = arch.hidden_widths
        for p in self.paths:
            if len(p) != len(hidden) or any(not 0 <= v < w for v, w in zip(p, hidden)):
                raise ValueError(f"path {p} is out of range for hidden widths {hidden}")


def _relu_layers(arch: Architecture, theta: ParamAssignment, x: Sequence):
    arch.check_params(theta)
    h = tuple(parse_rational(v) for v in x)
    if len(h) != arch.n_in:
        raise ValueError(f"input has length {len(h)}, expected {arch.n_in}")
    pattern = []
    boundary = False
    for l in range(1, arch.depth):
        pre = theta.weights[l - 1].apply(h)
        if theta.biases is not None:
            pre = tuple(a + b for a, b in zip(pre, theta.biases[l - 1]))
        boundary = boundary or any(v == 0 for v in pre)
        pattern.append(tuple(int(v > 0) for v in pre))
        h = tuple(v if v > 0 else Fraction(0) for v in pre)
    out = theta.weights[-1].apply(h)
    if theta.biases is not None:
        out = tuple(a + b for a, b in zip(out, theta.biases[-1]))
    return out, Pattern(tuple(pattern)), boundary


def forward_eval(arch: Architecture, theta: ParamAssignment, x: Sequence) -> tuple[tuple[Fraction, ...], Pattern]:
    """Exact network output and activation pattern, with sgn(0) = 0."""
    out, pattern, _ = _relu_layers(arch, theta, x)
    return out, pattern


def masked_matrix(arch: Architecture, theta: ParamAssignment, pattern: Pattern) -> tuple[RationalMatrix, tuple[Fraction, ...]]:
    """Linear part M and offset b of the network restricted to ``pattern``."""
    arch.check_pattern(pattern)
    arch.check_params(theta)
    m = theta.weights[0]
    b = tuple(theta.biases[0]) if theta.biases is not None else (Fraction(0),) * arch.widths[1]
    for l in range(1, arch.depth):
        mask = pattern.layers[l - 1]
        m = RationalMatrix._trusted(
            tuple(row if a else (Fraction(0),) * m.ncols for row, a in zip(m.rows, mask)), m.nrows, m.ncols
        )
        b = tuple(v if a else Fraction(0) for v, a in zip(b, mask))
        w = theta.weights[l]
        m = w @ m
        b = w.apply(b)
        if theta.biases is not None:
            b = tuple(u + v for u, v in zip(b, theta.biases[l]))
    return m, b


def enumerate_active_paths(arch: Architecture, pattern: Pattern) -> PathSet:
    arch.check_pattern(pattern)
    choices = [[i for i, v in enumerate(layer) if v] for layer in pattern.layers]
    return PathSet(tuple(itertools.product(*choices)))


def all_paths(arch: Architecture) -> tuple[tuple[int, ...], ...]:
    """Every path through the hidden layers, in lexicographic order."""
    return tuple(itertools.product(*(range(w) for w in arch.hidden_widths)))


def path_indicator(arch: Architecture, pattern: Pattern) -> tuple[int, ...]:
    """0/1 vector over all paths (lexicographic) marking the active ones."""
    active = set(enumerate_active_paths(arch, pattern).paths)
    return tuple(int(p in active) for p in all_paths(arch))


def path_matrix(arch: Architecture, theta: ParamAssignment, paths: PathSet) -> RationalMatrix:
    """Sum over ``paths`` of the weight products along each path."""
    paths.check(arch)
    arch.check_params(theta)
    n0, nl = arch.n_in, arch.n_out
    w = [wt.rows for wt in theta.weights]
    acc = [[Fraction(0)] * n0 for _ in range(nl)]
    for p in paths:
        inner = Fraction(1)
        for l in range(1, len(p)):
            inner *= w[l][p[l]][p[l - 1]]
            if not inner:
                break
        if not inner:
            continue
        first = w[0][p[0]]
        last = [w[-1][i][p[-1]] for i in range(nl)]
        for i in range(nl):
            if last[i]:
                c = inner * last[i]
                row = acc[i]
                for j in range(n0):
                    if first[j]:
                        row[j] += c * first[j]
    return RationalMatrix(acc)


def effective_widths(arch: Architecture, pattern: Pattern) -> tuple[int, ...]:
    """Widths of the linear network equivalent to ``pattern``: n_0, n_1^A, ..., n_L."""
    arch.check_pattern(pattern)
    return (arch.n_in, *pattern.counts(), arch.n_out)


def generic_rank_bound(arch: Architecture, pattern: Pattern) -> int:
    """min of the effective widths: the generic rank of the masked matrix."""
    return min(effective_widths(arch, pattern))


def block_output(
    arch: Architecture,
    theta: ParamAssignment,
    blocks: BlockPattern,
    x_blocks: Sequence[RationalMatrix],
) -> RationalMatrix:
    """[M_1 X_1 + B_1 | ... | M_k X_k + B_k]."""
    if len(x_blocks) != len(blocks):
        raise ValueError(f"{len(x_blocks)} data blocks for {len(blocks)} patterns")
    parts = []
    for pattern, x in zip(blocks, x_blocks):
        if x.nrows != arch.n_in:
            raise ValueError(f"data block has {x.nrows} rows, expected {arch.n_in}")
        m, b = masked_matrix(arch, theta, pattern)
        y = m @ x
        if arch.has_bias:
            y = y + RationalMatrix.column(b) @ RationalMatrix.ones(1, x.ncols)
        parts.append(y)
    return parts[0].hstack(*parts[1:])
