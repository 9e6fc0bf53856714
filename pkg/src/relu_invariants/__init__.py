"""Rank-constraint invariants of ReLU network outputs over activation regions."""

from .constraints import Cell, LinearRelation, RankConstraint, Term
from .dimension import (
    DimensionReport,
    dimension_bounds,
    expected_dimension_multi_block,
    expected_dimension_two_block,
    functional_dimension,
    jacobian,
)
from .exact_linalg import RationalMatrix, invert, kernel_basis, rank_exact
from .invariants import (
    TwoBlockStats,
    block_matrix_constraint,
    build_catalog,
    deep_lin_comb_constraint,
    lin_comb_constraint,
    search_sparse_lambdas,
    single_block_constraints,
    single_block_dimension,
    two_block_deep,
    two_block_shallow,
)
from .model import (
    Architecture,
    BlockPattern,
    ParamAssignment,
    PathSet,
    Pattern,
    block_output,
    effective_widths,
    enumerate_active_paths,
    forward_eval,
    masked_matrix,
    path_matrix,
)
from .transform import DatasetBlocks, classify_blocks, dependency_rows, psi_inverse
from .verify import SampleSpec, Verdict, check_constraint, check_vanishing, generic_rank, sample_params

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "BlockPattern",
    "Cell",
    "DatasetBlocks",
    "DimensionReport",
    "LinearRelation",
    "ParamAssignment",
    "PathSet",
    "Pattern",
    "RankConstraint",
    "RationalMatrix",
    "SampleSpec",
    "Term",
    "TwoBlockStats",
    "Verdict",
    "block_matrix_constraint",
    "block_output",
    "build_catalog",
    "check_constraint",
    "check_vanishing",
    "classify_blocks",
    "deep_lin_comb_constraint",
    "dependency_rows",
    "dimension_bounds",
    "effective_widths",
    "enumerate_active_paths",
    "expected_dimension_multi_block",
    "expected_dimension_two_block",
    "forward_eval",
    "functional_dimension",
    "generic_rank",
    "invert",
    "jacobian",
    "kernel_basis",
    "lin_comb_constraint",
    "masked_matrix",
    "path_matrix",
    "psi_inverse",
    "rank_exact",
    "sample_params",
    "search_sparse_lambdas",
    "single_block_constraints",
    "single_block_dimension",
    "two_block_deep",
    "two_block_shallow",
]
