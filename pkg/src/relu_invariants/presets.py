"""Named configurations for worked examples."""

from __future__ import annotations

import copy

__all__ = ["PRESETS", "ALIASES", "get_preset", "list_presets"]


def _config(widths, blocks, dataset=None, bias=False, samples=8, search=None):
    cfg = {
        "schema_version": "v1",
        "architecture": {"widths": list(widths), "bias": bias},
        "blocks": blocks,
        "verify": {"master_seed": 1729, "num_samples": samples, "coeff_bound": 100},
    }
    if dataset is not None:
        cfg["dataset"] = dataset
    if search is not None:
        cfg["search"] = search
    return cfg


PRESETS: dict[str, tuple[str, dict]] = {
    "single-block-four-points": (
        "(3,2,2), one block with one live neuron, four data points: 2 linear relations and 3 quadrics",
        _config((3, 2, 2), [[[1, 0]]],
                dataset=[[[3, 0, -1], [1, 1, -1], [3, 5, 5], [0, 4, 0]]], samples=64),
    ),
    "shallow-4x4-two-block": (
        "(4,4,4), blocks 1110 / 0111: two quartic determinants, 16 cubics, dimension 26",
        _config((4, 4, 4), [[[1, 1, 1, 0]], [[0, 1, 1, 1]]]),
    ),
    "shallow-4-3-4-two-block": (
        "(4,3,4), blocks 110 / 011: 48 cubics, dimension 21",
        _config((4, 3, 4), [[[1, 1, 0]], [[0, 1, 1]]]),
    ),
    "shallow-434-dimdrop": (
        "(3,4,3), blocks 1110 / 0111: one cubic, dimension 17 below the expected 18",
        _config((3, 4, 3), [[[1, 1, 1, 0]], [[0, 1, 1, 1]]]),
    ),
    "shallow-434-three-block": (
        "(3,4,3), blocks 1100 / 1010 / 1001: six lambdas, block matrix T, dimension 20",
        _config((3, 4, 3), [[[1, 1, 0, 0]], [[1, 0, 1, 0]], [[1, 0, 0, 1]]],
                search={"lambda_coeff_bound": 1}),
    ),
    "multiblock-444-three-block": (
        "(4,4,4), blocks 1100 / 1010 / 1001: lambda and block-matrix families",
        _config((4, 4, 4), [[[1, 1, 0, 0]], [[1, 0, 1, 0]], [[1, 0, 0, 1]]],
                search={"lambda_coeff_bound": 1}),
    ),
    "multiblock-455-dim40": (
        "(4,5,5), three blocks with five neuron classes: dimension 40 of 60",
        _config((4, 5, 5), [[[1, 0, 0, 1, 1]], [[0, 1, 0, 1, 1]], [[0, 0, 1, 0, 1]]],
                search={"lambda_coeff_bound": 1}),
    ),
    "deep-2222-fig3": (
        "(2,2,2,2,2), two blocks with a rank-2 private path network: dimension 6 of 8",
        _config((2, 2, 2, 2, 2), [[[1, 1], [0, 1], [1, 1]], [[0, 1], [1, 1], [0, 1]]]),
    ),
    "deep-33233-ex68": (
        "(3,3,2,3,3), blocks differing in the first layer: 9 quadrics, dimension 12 of 18",
        _config((3, 3, 2, 3, 3), [[[1, 1, 1], [1, 1], [1, 1, 1]], [[0, 1, 1], [1, 1], [1, 1, 1]]]),
    ),
    "deep-tightness-remark": (
        "(4,3,3,3,4), alternating patterns: t = 4 while rank(M1 - M2) is 3",
        _config((4, 3, 3, 3, 4), [[[1, 1, 0], [0, 1, 1], [1, 1, 0]], [[0, 1, 1], [1, 1, 0], [0, 1, 1]]]),
    ),
    "psi-example-51": (
        "(2,1,2,2), two invertible data blocks: transformed quadrics on the outputs",
        _config((2, 1, 2, 2), [[[1], [1, 0]], [[1], [0, 1]]],
                dataset=[[[1, 1], [2, 3]], [[1, 2], [3, 1]]], samples=64),
    ),
    "psi-oversized-block": (
        "(2,1,2,2), an oversized first block: core columns plus dependency rows (1,-4,1)",
        _config((2, 1, 2, 2), [[[1], [1, 0]], [[1], [0, 1]]],
                dataset=[[[3, 1], [1, 1], [1, 3]], [[1, 0], [2, 1]]], samples=64),
    ),
}

ALIASES = {"deep-6-8": "deep-2222-fig3"}


def get_preset(name: str) -> dict:
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise KeyError(name)
    return copy.deepcopy(PRESETS[key][1])


def list_presets() -> list[tuple[str, str]]:
    out = [(name, desc) for name, (desc, _) in PRESETS.items()]
    out += [(alias, f"alias of {target}") for alias, target in ALIASES.items()]
    return out
