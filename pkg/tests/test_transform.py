import pytest

from relu_invariants.constraints import Cell, RankConstraint, Term
from relu_invariants.exact_linalg import MinorIndex, RationalMatrix
from relu_invariants.invariants import two_block_shallow, two_block_deep
from relu_invariants.model import Architecture, BlockPattern
from relu_invariants.poly import minor_polynomial
from relu_invariants.transform import (
    DEFICIENT,
    INVERTIBLE,
    OVERSIZED,
    UNDERSIZED,
    DatasetBlocks,
    classify_blocks,
    dependency_rows,
    psi_forward,
    psi_inverse,
)
from relu_invariants.verify import SampleSpec, check_constraints, check_vanishing, eval_constraint_matrix, sample_params

from conftest import pat

ARCH = Architecture((2, 1, 2, 2))
BLOCKS = BlockPattern((pat([1], [1, 0]), pat([1], [0, 1])))
X1 = RationalMatrix.from_columns([[1, 1], [2, 3]], 2)
X2 = RationalMatrix.from_columns([[1, 2], [3, 1]], 2)
SPEC = SampleSpec(num_samples=32)


def type3b():
    return RankConstraint(((Cell.block(0, True), Cell.block(1, True)),), 1, "type3b", family="type3b")


def test_two_block_dataset_polynomial():
    c = type3b()
    idx = MinorIndex((0, 1), (1, 3))
    assert str(minor_polynomial(c, idx, ARCH)) == "m1_21*m2_22 - m1_22*m2_21"
    t = psi_inverse(c, DatasetBlocks((X1, X2)))
    assert t.label == "type3b-psi" and t.bound == 1
    poly = minor_polynomial(t, idx, ARCH, [2, 2])
    assert str(poly) == "7/5*y1_21*y2_21 + 1/5*y1_21*y2_22 - 2/5*y1_22*y2_21 - 1/5*y1_22*y2_22"
    assert check_vanishing(poly, ARCH, BLOCKS, [X1, X2], SPEC).holds


def test_transformed_catalog_holds_on_outputs():
    _, cs = two_block_deep(ARCH, BLOCKS[0], BLOCKS[1], SampleSpec(num_samples=4))
    data = DatasetBlocks((X1, X2))
    moved = [psi_inverse(c, data) for c in cs]
    assert all(v.holds for v in check_constraints(moved, ARCH, BLOCKS, SPEC, [X1, X2]))


def test_round_trip_reproduces_the_original_matrix():
    arch = Architecture((3, 3, 3))
    blocks = BlockPattern((pat([1, 1, 0]), pat([0, 1, 1])))
    xs = [RationalMatrix([[1, 0, 2], [0, 1, 1], [1, 1, 0]]), RationalMatrix([[2, 1, 0, 1], [0, 1, 0, 2], [1, 0, 1, 0]])]
    data = DatasetBlocks(tuple(xs))
    _, cs = two_block_shallow(arch, blocks[0], blocks[1])
    for c in cs:
        back = psi_forward(psi_inverse(c, data), data)
        for i in range(3):
            theta = sample_params(arch, SampleSpec(num_samples=3), i)
            assert eval_constraint_matrix(back, arch, blocks, theta, xs) == eval_constraint_matrix(c, arch, blocks, theta)


def test_classification():
    data = classify_blocks(DatasetBlocks((
        RationalMatrix([[3, 1, 1], [1, 1, 3]]),
        RationalMatrix([[1, 0], [2, 1]]),
        RationalMatrix([[1, 2], [1, 2]]),
        RationalMatrix([[1], [4]]),
    )))
    assert data.status == (OVERSIZED, INVERTIBLE, DEFICIENT, UNDERSIZED)
    assert data.cores[0] == (0, 1)


def test_oversized_dependency_rows():
    x = RationalMatrix([[3, 1, 1], [1, 1, 3]])
    rows = dependency_rows(x, 2)
    assert [r.coefficients for r in rows] == [(1, -4, 1)] * 2
    data = DatasetBlocks((x, X2))
    t = psi_inverse(type3b(), data)
    assert "X1 core columns 1,2" in t.note
    xs = [x, X2]
    assert check_constraints([t], ARCH, BLOCKS, SPEC, xs)[0].holds
    assert check_vanishing(rows, ARCH, BLOCKS, xs, SPEC).holds


def test_refusals():
    with pytest.raises(ValueError, match="deficient"):
        psi_inverse(type3b(), DatasetBlocks((RationalMatrix([[1, 2], [1, 2]]), X2)))
    offset = RankConstraint.single(Cell((Term(0, symbol="b"),)), 1, "b")
    with pytest.raises(ValueError):
        psi_inverse(offset, DatasetBlocks((X1, X2)))
    with pytest.raises(ValueError):
        DatasetBlocks((X1, RationalMatrix([[1, 2, 3]])))
