from fractions import Fraction

import pytest

from relu_invariants.model import Architecture, ParamAssignment
from relu_invariants.regions import BOUNDARY_ID, SliceSpec, region_count, region_scan, regions_to_csv


def two_relus():
    arch = Architecture((2, 2, 1), has_bias=True)
    theta = ParamAssignment(([[1, 0], [0, 1]], [[1, 1]]), ((0, 0), (0,)))
    return arch, theta


def test_quadrants():
    arch, theta = two_relus()
    spec = SliceSpec((0, 0), (1, 0), (0, 1), width=4, height=4)
    cells = region_scan(arch, theta, spec)
    assert len(cells) == 16
    assert region_count(cells) == 4
    assert BOUNDARY_ID not in {c.pattern_id for c in cells}


def test_boundary_points_are_flagged():
    arch, theta = two_relus()
    cells = region_scan(arch, theta, SliceSpec((0, 0), (1, 0), (0, 1), width=3, height=3))
    assert sum(c.pattern_id == BOUNDARY_ID for c in cells) == 5
    assert region_count(cells) == 4
    assert region_count(cells, include_boundary=True) == 5


def test_csv_format():
    arch, theta = two_relus()
    text = regions_to_csv(region_scan(arch, theta, SliceSpec((0, 0), (1, 0), (0, 1), width=2, height=1)))
    lines = text.splitlines()
    assert lines[0] == "u,v,pattern_id"
    assert lines[1].startswith("-1,-1,") and lines[2].startswith("1,-1,")


def test_axis_is_exact():
    s = SliceSpec((0, 0), (1, 0), (0, 1), u_range=(0, 1), width=4, height=1)
    assert s.axis(Fraction(0), Fraction(1), 4)[1] == Fraction(1, 3)


def test_degenerate_slice():
    with pytest.raises(ValueError):
        SliceSpec((0, 0), (1, 2), (2, 4))
    arch, theta = two_relus()
    with pytest.raises(ValueError):
        region_scan(arch, theta, SliceSpec((0, 0, 0), (1, 0, 0), (0, 1, 0)))
