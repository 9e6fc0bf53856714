import pytest

from relu_invariants.constraints import Cell, LinearRelation, RankConstraint
from relu_invariants.exact_linalg import RationalMatrix
from relu_invariants.model import Architecture, BlockPattern, enumerate_active_paths
from relu_invariants.verify import (
    SampleSpec,
    check_constraint,
    check_constraints,
    check_vanishing,
    generic_rank,
    sample_params,
)

from conftest import pat


def test_sampling_is_deterministic_and_bounded():
    arch = Architecture((3, 4, 2), has_bias=True)
    spec = SampleSpec(42, 3, 5)
    a = sample_params(arch, spec, 2)
    assert a == sample_params(arch, spec, 2)
    assert a != sample_params(arch, spec, 1)
    assert all(abs(v) <= 5 for w in a.weights for row in w.rows for v in row)
    assert a.biases is not None and len(a.biases) == 2
    with pytest.raises(IndexError):
        sample_params(arch, spec, 3)


def test_spec_validation():
    for kw in ({"num_samples": 0}, {"coeff_bound": 0}, {"master_seed": -1}, {"master_seed": 2**64}):
        with pytest.raises(ValueError):
            SampleSpec(**kw)


def test_true_bound_holds_and_is_tight():
    arch = Architecture((4, 4, 4))
    blocks = BlockPattern((pat([1, 1, 0, 0]),))
    v = check_constraint(RankConstraint.single(Cell.block(0), 2, "r"), arch, blocks)
    assert v.holds and v.tight and v.max_rank_observed == 2 and v.violations == 0


def test_false_bound_is_a_hard_failure():
    arch = Architecture((4, 4, 4))
    blocks = BlockPattern((pat([1, 1, 1, 0]),))
    v = check_constraint(RankConstraint.single(Cell.block(0), 2, "r"), arch, blocks, SampleSpec(num_samples=4))
    assert not v.holds and v.violations == 4 and v.first_violation_seed == 0


def test_shared_checks_match_individual():
    arch = Architecture((3, 3, 3))
    blocks = BlockPattern((pat([1, 1, 0]), pat([0, 1, 1])))
    cs = [RankConstraint.single(Cell.lincomb((1, -1)), 2, "d"), RankConstraint.single(Cell.block(1), 1, "w")]
    together = check_constraints(cs, arch, blocks)
    assert together == [check_constraint(c, arch, blocks) for c in cs]
    assert [v.holds for v in together] == [True, False]


def test_generic_rank_of_path_set_and_cell():
    arch = Architecture((3, 2, 2, 3))
    p = pat([1, 1], [1, 0])
    blocks = BlockPattern((p,))
    assert generic_rank(enumerate_active_paths(arch, p), arch) == 1
    assert generic_rank(Cell.block(0), arch, blocks) == 1


def test_vanishing_on_dataset():
    arch = Architecture((3, 2, 2))
    blocks = BlockPattern((pat([1, 0]),))
    x = RationalMatrix([[3, 1, 3, 0], [0, 1, 5, 4], [-1, -1, 5, 0]])
    good = [LinearRelation(0, k, (8, -18, -2, 7)) for k in range(2)]
    assert check_vanishing(good, arch, blocks, [x]).holds
    bad = check_vanishing(LinearRelation(0, 0, (1, 0, 0, 0)), arch, blocks, [x], SampleSpec(num_samples=3))
    assert not bad.holds and bad.violations == 3


def test_missing_block_is_an_error():
    arch = Architecture((2, 2, 2))
    with pytest.raises(ValueError):
        check_constraint(RankConstraint.single(Cell.block(3), 1, "x"), arch, BlockPattern((pat([1, 1]),)))
