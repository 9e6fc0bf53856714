"""Config parsing and the analysis pipeline behind the command line."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable

import jsonschema

from . import __version__
from .constraints import constraint_to_json, relation_to_json
from .dimension import (
    expected_dimension_two_block,
    functional_dimension,
    jacobian_row_groups,
)
from .exact_linalg import RationalMatrix, parse_rational
from .invariants import Catalog, SearchOptions, build_catalog, single_block_constraints
from .model import (
    Architecture,
    BlockPattern,
    ParamAssignment,
    Pattern,
    effective_widths,
    enumerate_active_paths,
    generic_rank_bound,
)
from .regions import SliceSpec, region_count, region_scan, regions_to_csv
from .transform import DatasetBlocks, classify_blocks, dependency_rows, psi_inverse
from .verify import SampleSpec, check_constraints, check_vanishing, sample_params

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "AnalysisConfig",
    "load_schema",
    "parse_config",
    "load_config_file",
    "with_overrides",
    "analyze",
    "report_failed",
    "regions_csv",
    "dumps",
]

SCHEMA_VERSION = "v1"
STAGES = ("invariants", "verify", "dimension", "transform")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path or "<root>"
        super().__init__(f"config error at {self.path}: {message}")


def load_schema(name: str) -> dict:
    return json.loads(resources.files("relu_invariants").joinpath("schemas", f"{name}_v1.json").read_text())


@dataclass(frozen=True)
class AnalysisConfig:
    arch: Architecture
    patterns: BlockPattern
    spec: SampleSpec
    search: SearchOptions
    max_minors: int = 10_000
    list_minors: bool = False
    dataset: DatasetBlocks | None = None
    params: ParamAssignment | None = None
    regions: dict | None = None
    raw: dict | None = None

    def echo(self) -> dict:
        out = dict(self.raw or {})
        out["verify"] = {
            "master_seed": self.spec.master_seed,
            "num_samples": self.spec.num_samples,
            "coeff_bound": self.spec.coeff_bound,
        }
        out["limits"] = {"max_minors": self.max_minors, "list_minors": self.list_minors}
        out["schema_version"] = SCHEMA_VERSION
        return out


def _path(parts: Iterable) -> str:
    return "/".join(str(p) for p in parts)


def _rational(value, path: str):
    try:
        return parse_rational(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(path, f"malformed rational {value!r} ({exc})") from None


def _matrix_from_columns(columns, n0: int, path: str) -> RationalMatrix:
    cols = []
    for j, col in enumerate(columns):
        if len(col) != n0:
            raise ConfigError(f"{path}/{j}", f"data point has {len(col)} coordinates, expected {n0}")
        cols.append([_rational(col[r], f"{path}/{j}/{r}") for r in range(n0)])
    return RationalMatrix.from_columns(cols, n0)


def parse_config(data: dict) -> AnalysisConfig:
    """Validate a config dict against the v1 schema and build the typed config."""
    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(_path(err.absolute_path), err.message)
    arch_data = data["architecture"]
    arch = Architecture(tuple(arch_data["widths"]), bool(arch_data.get("bias", False)))

    patterns = []
    for i, block in enumerate(data["blocks"]):
        if len(block) != arch.depth - 1:
            raise ConfigError(f"blocks/{i}", f"{len(block)} layers given, architecture has {arch.depth - 1} hidden layers")
        for l, layer in enumerate(block):
            if len(layer) != arch.widths[l + 1]:
                raise ConfigError(f"blocks/{i}/{l}", f"length {len(layer)}, hidden width is {arch.widths[l + 1]}")
        p = Pattern(tuple(tuple(layer) for layer in block))
        if p in patterns:
            raise ConfigError(f"blocks/{i}", f"repeats block {patterns.index(p)}")
        patterns.append(p)

    dataset = None
    if "dataset" in data:
        if len(data["dataset"]) != len(patterns):
            raise ConfigError("dataset", f"{len(data['dataset'])} data blocks for {len(patterns)} patterns")
        dataset = DatasetBlocks(tuple(
            _matrix_from_columns(cols, arch.n_in, f"dataset/{i}") for i, cols in enumerate(data["dataset"])
        ))

    params = None
    if "params" in data:
        weights = []
        for l, w in enumerate(data["params"]["weights"]):
            rows = [[_rational(v, f"params/weights/{l}/{a}/{b}") for b, v in enumerate(row)] for a, row in enumerate(w)]
            weights.append(rows)
        biases = None
        if "biases" in data["params"]:
            biases = tuple(
                tuple(_rational(v, f"params/biases/{l}/{a}") for a, v in enumerate(b))
                for l, b in enumerate(data["params"]["biases"])
            )
        try:
            params = ParamAssignment(tuple(RationalMatrix(w) for w in weights), biases)
            arch.check_params(params)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None

    regions = data.get("regions")
    if regions is not None:
        for key in ("origin", "dir_u", "dir_v"):
            if len(regions[key]) != arch.n_in:
                raise ConfigError(f"regions/{key}", f"length {len(regions[key])}, input dimension is {arch.n_in}")
            for r, v in enumerate(regions[key]):
                _rational(v, f"regions/{key}/{r}")

    v = data.get("verify", {})
    spec = SampleSpec(v.get("master_seed", 1729), v.get("num_samples", 8), v.get("coeff_bound", 100))
    try:
        search = SearchOptions(**data.get("search", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("search", str(exc)) from None
    limits = data.get("limits", {})
    return AnalysisConfig(
        arch=arch,
        patterns=BlockPattern(tuple(patterns)),
        spec=spec,
        search=search,
        max_minors=limits.get("max_minors", 10_000),
        list_minors=limits.get("list_minors", False),
        dataset=dataset,
        params=params,
        regions=regions,
        raw=json.loads(json.dumps(data)),
    )


def load_config_file(path: str) -> AnalysisConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return parse_config(data)


def with_overrides(cfg: AnalysisConfig, seed=None, samples=None, coeff_bound=None, max_minors=None) -> AnalysisConfig:
    try:
        spec = SampleSpec(
            cfg.spec.master_seed if seed is None else seed,
            cfg.spec.num_samples if samples is None else samples,
            cfg.spec.coeff_bound if coeff_bound is None else coeff_bound,
        )
    except ValueError as exc:
        raise ConfigError("verify", str(exc)) from None
    if max_minors is not None and max_minors < 0:
        raise ConfigError("limits/max_minors", "must be non-negative")
    return replace(cfg, spec=spec, max_minors=cfg.max_minors if max_minors is None else max_minors)


def _constraint_entry(c, cfg: AnalysisConfig, data_cols=None) -> dict:
    entry = constraint_to_json(c, cfg.arch, data_cols, cap=cfg.max_minors)
    if cfg.list_minors:
        entry["minors"] = [[list(m.row_subset), list(m.col_subset)] for m in c.minors(cfg.arch, data_cols, cfg.max_minors)]
    return entry


def _patterns_section(cfg: AnalysisConfig) -> list[dict]:
    return [
        {
            "block": i + 1,
            "layers": p.to_lists(),
            "pattern_id": p.pattern_id(),
            "effective_widths": list(effective_widths(cfg.arch, p)),
            "rank_bound": generic_rank_bound(cfg.arch, p),
            "active_paths": len(enumerate_active_paths(cfg.arch, p)),
        }
        for i, p in enumerate(cfg.patterns)
    ]


def _inventory(entries: list[dict]) -> dict:
    families: dict[str, dict] = {}
    for e in entries:
        fam = families.setdefault(e["family"] or e["label"], {"constraints": 0, "minors": 0, "degrees": []})
        fam["constraints"] += 1
        fam["minors"] += e["count"]
        if e["minor_size"] not in fam["degrees"]:
            fam["degrees"].append(e["minor_size"])
    for fam in families.values():
        fam["degrees"].sort()
    return {
        "constraints": len(entries),
        "minors": sum(e["count"] for e in entries),
        "by_family": dict(sorted(families.items())),
    }


def _verdict_summary(verdicts) -> dict:
    verdicts = list(verdicts)
    return {
        "checked": len(verdicts),
        "violations": sum(v.violations for v in verdicts),
        "all_hold": all(v.holds for v in verdicts),
    }


def _single_block_section(cfg: AnalysisConfig, verify: bool, notes: list[str]) -> dict:
    x = cfg.dataset.blocks[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = single_block_constraints(cfg.arch, cfg.patterns[0], x)
    notes.extend(res.warnings)
    notes.append("linear relation count taken as n_L * max(m - n_0, 0); with offsets n_0 is replaced by n_0 + 1")
    out = {
        "counts": res.counts,
        "core_columns": [c + 1 for c in res.core_columns],
        "general_position": res.general_position,
        "linear": [relation_to_json(r) for r in res.linear],
        "minors": None if res.minors is None else _constraint_entry(res.minors, cfg, [x.ncols]),
    }
    if verify:
        checks = []
        if res.linear:
            v = check_vanishing(res.linear, cfg.arch, cfg.patterns, cfg.dataset.blocks, cfg.spec)
            out["linear_verdict"] = v.to_json()
            checks.append(v)
        if res.minors is not None:
            v = check_constraints([res.minors], cfg.arch, cfg.patterns, cfg.spec, cfg.dataset.blocks)[0]
            out["minors"]["verdict"] = v.to_json()
            checks.append(v)
        out["summary"] = _verdict_summary(checks)
    return out


def _transform_section(cfg: AnalysisConfig, catalog: Catalog, verify: bool, notes: list[str]) -> dict:
    data = classify_blocks(cfg.dataset)
    section = {"dataset": data.to_json()}
    if len(cfg.patterns) == 1:
        section["single_block"] = _single_block_section(cfg, verify, notes)
        return section
    if cfg.arch.has_bias:
        notes.append("transform skipped: the substitution M = Y X^-1 assumes no offsets")
        section["transformed"] = []
        return section
    data_cols = [x.ncols for x in data.blocks]
    transformed, skipped = [], []
    for c in catalog.constraints:
        try:
            transformed.append(psi_inverse(c, data))
        except ValueError as exc:
            skipped.append({"label": c.label, "expression": c.describe(), "reason": str(exc)})
    entries = [_constraint_entry(c, cfg, data_cols) for c in transformed]
    relations = []
    for i, x in enumerate(data.blocks):
        relations += dependency_rows(x, cfg.arch.n_out, block=i)
    section["transformed"] = entries
    section["skipped"] = skipped
    section["dependency_rows"] = [relation_to_json(r) for r in relations]
    if skipped:
        notes.append(f"{len(skipped)} constraints not transformed: data blocks lack n_0 independent points")
    if verify:
        verdicts = check_constraints(transformed, cfg.arch, cfg.patterns, cfg.spec, data.blocks)
        for e, v in zip(entries, verdicts):
            e["verdict"] = v.to_json()
        checks = list(verdicts)
        if relations:
            v = check_vanishing(relations, cfg.arch, cfg.patterns, data.blocks, cfg.spec)
            section["dependency_verdict"] = v.to_json()
            checks.append(v)
        section["summary"] = _verdict_summary(checks)
    return section


def _dimension_section(cfg: AnalysisConfig, notes: list[str]) -> dict | None:
    if cfg.arch.has_bias:
        notes.append("dimension skipped: the Jacobian analysis covers networks without offsets")
        return None
    rep = functional_dimension(cfg.arch, cfg.patterns, cfg.spec)
    out = rep.to_json()
    if cfg.arch.depth == 2:
        out["row_groups"] = jacobian_row_groups(cfg.arch, cfg.patterns, sample_params(cfg.arch, cfg.spec, 0))
        if len(cfg.patterns) == 2:
            da, db, dc, _ = expected_dimension_two_block(cfg.arch, cfg.patterns[0], cfg.patterns[1])
            out["terms"] = {"d_a": da, "d_b": db, "d_c": dc}
            out["lower_bound_second_term"] = "d_b"
    return out


def analyze(cfg: AnalysisConfig, stages: Iterable[str] = STAGES) -> dict:
    """Run the requested stages and return the report as a JSON-ready dict."""
    stages = set(stages)
    unknown = stages - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages {sorted(unknown)}")
    notes: list[str] = []
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "relu-invariants", "version": __version__},
        "config": cfg.echo(),
        "stages": [s for s in STAGES if s in stages],
        "patterns": _patterns_section(cfg),
    }
    verify = "verify" in stages
    catalog = None
    if stages & {"invariants", "verify", "transform"}:
        catalog = build_catalog(cfg.arch, cfg.patterns, cfg.spec, cfg.search)
    checks = []
    if stages & {"invariants", "verify"}:
        entries = [_constraint_entry(c, cfg) for c in catalog.constraints]
        report["pair_stats"] = [
            {"blocks": [i + 1, j + 1], **stats.to_json()} for (i, j), stats in sorted(catalog.pair_stats.items())
        ]
        report["lambdas"] = [list(lam) for lam in catalog.lambdas]
        report["inventory"] = _inventory(entries)
        report["constraints"] = entries
        if verify:
            verdicts = check_constraints(catalog.constraints, cfg.arch, cfg.patterns, cfg.spec)
            for e, v in zip(entries, verdicts):
                e["verdict"] = v.to_json()
            checks += verdicts
            diag = check_constraints(catalog.diagnostics, cfg.arch, cfg.patterns, cfg.spec)
            report["difference_ranks"] = [
                {
                    "blocks": [c.blocks[0] + 1, c.blocks[1] + 1],
                    "t": c.bound,
                    "observed": v.max_rank_observed,
                    "holds": v.holds,
                    "tight": v.tight,
                }
                for c, v in zip(catalog.diagnostics, diag)
            ]
            checks += diag
    if "dimension" in stages:
        report["dimension"] = _dimension_section(cfg, notes)
    if "transform" in stages:
        if cfg.dataset is None:
            notes.append("no dataset given: output-variety stage skipped")
            report["output_variety"] = None
        else:
            section = _transform_section(cfg, catalog, verify, notes)
            report["output_variety"] = section
    if verify:
        summary = _verdict_summary(checks)
        ov = report.get("output_variety") or {}
        for part in (ov.get("summary"), (ov.get("single_block") or {}).get("summary")):
            if part:
                summary["checked"] += part["checked"]
                summary["violations"] += part["violations"]
                summary["all_hold"] = summary["all_hold"] and part["all_hold"]
        summary["samples"] = cfg.spec.num_samples
        report["summary"] = summary
    report["warnings"] = list(dict.fromkeys(notes))
    return report


def report_failed(report: dict) -> bool:
    summary = report.get("summary")
    return bool(summary) and not summary["all_hold"]


def regions_csv(cfg: AnalysisConfig, grid: tuple[int, int] | None = None) -> tuple[str, int]:
    """CSV of the region scan and the number of distinct regions."""
    r = cfg.regions
    if r is None:
        # default slice: the plane of the first two input axes through the origin
        n0 = cfg.arch.n_in
        if n0 < 2:
            raise ConfigError("regions", "a 2D slice needs at least two inputs")
        r = {
            "origin": [0] * n0,
            "dir_u": [1] + [0] * (n0 - 1),
            "dir_v": [0, 1] + [0] * (n0 - 2),
        }
    width, height = grid if grid else (r.get("width", 64), r.get("height", 64))
    try:
        spec = SliceSpec(
            tuple(r["origin"]), tuple(r["dir_u"]), tuple(r["dir_v"]),
            tuple(r.get("u_range", (-1, 1))), tuple(r.get("v_range", (-1, 1))), width, height,
        )
    except ValueError as exc:
        raise ConfigError("regions", str(exc)) from None
    theta = cfg.params
    if theta is None:
        index = r.get("sample_index", 0)
        if index >= cfg.spec.num_samples:
            raise ConfigError("regions/sample_index", f"{index} is outside 0..{cfg.spec.num_samples - 1}")
        theta = sample_params(cfg.arch, cfg.spec, index)
    cells = region_scan(cfg.arch, theta, spec)
    return regions_to_csv(cells), region_count(cells)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
