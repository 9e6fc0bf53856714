"""Activation-region scans over a 2D affine slice of input space."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact_linalg import RationalMatrix, format_rational, parse_rational, rank_exact
from .model import Architecture, ParamAssignment, _relu_layers

__all__ = ["SliceSpec", "RegionCell", "BOUNDARY_ID", "region_scan", "regions_to_csv", "region_count"]

BOUNDARY_ID = "boundary"


@dataclass(frozen=True)
class SliceSpec:
    """Points ``origin + u * dir_u + v * dir_v`` on a ``width`` x ``height`` grid.

    ``u`` runs over ``width`` evenly spaced values in ``u_range`` (inclusive),
    likewise ``v``.
    """

    origin: tuple[Fraction, ...]
    dir_u: tuple[Fraction, ...]
    dir_v: tuple[Fraction, ...]
    u_range: tuple[Fraction, Fraction] = (Fraction(-1), Fraction(1))
    v_range: tuple[Fraction, Fraction] = (Fraction(-1), Fraction(1))
    width: int = 64
    height: int = 64

    def __post_init__(self):
        for name in ("origin", "dir_u", "dir_v", "u_range", "v_range"):
            object.__setattr__(self, name, tuple(parse_rational(v) for v in getattr(self, name)))
        if not (len(self.origin) == len(self.dir_u) == len(self.dir_v)):
            raise ValueError("slice vectors must share a dimension")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid resolution must be positive")
        if rank_exact(RationalMatrix([self.dir_u, self.dir_v])) < 2:
            raise ValueError("degenerate slice: direction vectors are dependent")

    def axis(self, lo: Fraction, hi: Fraction, n: int) -> list[Fraction]:
        if n == 1:
            return [lo]
        step = (hi - lo) / (n - 1)
        return [lo + i * step for i in range(n)]

    def points(self):
        """Yield ``(u, v, x)`` in row-major order (v outer, u inner)."""
        us = self.axis(*self.u_range, self.width)
        vs = self.axis(*self.v_range, self.height)
        for v in vs:
            for u in us:
                x = tuple(o + u * a + v * b for o, a, b in zip(self.origin, self.dir_u, self.dir_v))
                yield u, v, x


@dataclass(frozen=True)
class RegionCell:
    u: Fraction
    v: Fraction
    pattern_id: str


def region_scan(arch: Architecture, theta: ParamAssignment, spec: SliceSpec) -> list[RegionCell]:
    """Classify every grid point by activation pattern.

    Points where some pre-activation is exactly zero get ``BOUNDARY_ID``.
    """
    if len(spec.origin) != arch.n_in:
        raise ValueError(f"slice lives in dimension {len(spec.origin)}, network input is {arch.n_in}")
    cells = []
    for u, v, x in spec.points():
        _, pattern, on_boundary = _relu_layers(arch, theta, x)
        cells.append(RegionCell(u, v, BOUNDARY_ID if on_boundary else pattern.pattern_id()))
    return cells


def region_count(cells: Sequence[RegionCell], include_boundary: bool = False) -> int:
    ids = {c.pattern_id for c in cells}
    if not include_boundary:
        ids.discard(BOUNDARY_ID)
    return len(ids)


def regions_to_csv(cells: Sequence[RegionCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["u", "v", "pattern_id"])
    for c in cells:
        writer.writerow([format_rational(c.u), format_rational(c.v), c.pattern_id])
    return buf.getvalue()
