import json
import subprocess
import sys

import jsonschema
import pytest

from relu_invariants.cli import main
from relu_invariants.presets import PRESETS, get_preset, list_presets
from relu_invariants.report import STAGES, ConfigError, analyze, dumps, load_schema, parse_config

VALIDATOR = jsonschema.Draft202012Validator(load_schema("report"))


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_schemas_are_valid():
    jsonschema.Draft202012Validator.check_schema(load_schema("config"))
    jsonschema.Draft202012Validator.check_schema(load_schema("report"))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_report_validates_and_holds(name, capsys):
    code, out, _ = run(["preset", name], capsys)
    report = json.loads(out)
    VALIDATOR.validate(report)
    assert code == 0
    assert report["summary"]["all_hold"]
    assert all(c["verdict"]["holds"] for c in report.get("constraints", []))


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["report", "--preset", "deep-33233-ex68", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_samples_not_structure(capsys):
    _, one, _ = run(["verify", "--preset", "shallow-4x4-two-block", "--seed", "1"], capsys)
    _, two, _ = run(["verify", "--preset", "shallow-4x4-two-block", "--seed", "2"], capsys)
    r1, r2 = json.loads(one), json.loads(two)
    assert r1["config"]["verify"]["master_seed"] == 1
    assert [c["label"] for c in r1["constraints"]] == [c["label"] for c in r2["constraints"]]


def test_subcommand_stages(capsys):
    _, out, _ = run(["invariants", "--preset", "shallow-4x4-two-block"], capsys)
    r = json.loads(out)
    assert r["stages"] == ["invariants"] and "verdict" not in r["constraints"][0]
    _, out, _ = run(["dimension", "--preset", "shallow-4x4-two-block"], capsys)
    r = json.loads(out)
    assert r["dimension"]["jacobian_rank"] == 26 and "constraints" not in r


def test_alias_and_list(capsys):
    code, out, _ = run(["preset", "--list"], capsys)
    assert code == 0 and "deep-6-8" in out
    assert get_preset("deep-6-8") == get_preset("deep-2222-fig3")
    assert len(list_presets()) == len(PRESETS) + 1


def test_unknown_preset_is_a_config_error(capsys):
    code, _, err = run(["report", "--preset", "nope"], capsys)
    assert code == 2 and "unknown preset" in err


def test_bad_rational_names_its_path(tmp_path, capsys):
    cfg = get_preset("psi-example-51")
    cfg["dataset"][0][0][0] = "1/0"
    code, _, err = run(["report", "-c", write_config(tmp_path, cfg)], capsys)
    assert code == 2 and "dataset/0/0/0" in err


@pytest.mark.parametrize("mutate, where", [
    (lambda c: c["architecture"].update(widths=[3]), "architecture"),
    (lambda c: c["blocks"][0][0].append(1), "blocks/0/0"),
    (lambda c: c["blocks"].append(c["blocks"][0]), "blocks"),
    (lambda c: c.update(schema_version="v9"), "schema_version"),
    (lambda c: c["verify"].update(num_samples=0), "verify"),
    (lambda c: c.update(extra=1), ""),
])
def test_config_errors(mutate, where, tmp_path, capsys):
    cfg = get_preset("shallow-4x4-two-block")
    mutate(cfg)
    code, _, err = run(["report", "-c", write_config(tmp_path, cfg)], capsys)
    assert code == 2 and err.startswith("config error at") and where in err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["report", "-c", str(path)], capsys)[0] == 2
    assert run(["report", "-c", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_transform_needs_dataset(capsys):
    code, _, err = run(["transform", "--preset", "shallow-4x4-two-block"], capsys)
    assert code == 2 and "dataset" in err


def test_false_bound_exits_one(tmp_path, capsys, monkeypatch):
    import relu_invariants.report as report_mod

    real = report_mod.build_catalog

    def tightened(*args, **kwargs):
        cat = real(*args, **kwargs)
        cat.constraints = [c.with_bound(max(c.bound - 1, 0)) for c in cat.constraints]
        return cat

    monkeypatch.setattr(report_mod, "build_catalog", tightened)
    code, out, err = run(["verify", "--preset", "shallow-4x4-two-block", "--samples", "2"], capsys)
    assert code == 1 and "verification failed" in err
    assert not json.loads(out)["summary"]["all_hold"]


def test_regions_csv(tmp_path, capsys):
    cfg = get_preset("shallow-4x4-two-block")
    cfg["regions"] = {"origin": [0, 0, 0, 0], "dir_u": [1, 0, 0, 0], "dir_v": [0, 1, 0, 0],
                      "width": 5, "height": 4}
    code, out, err = run(["regions", "-c", write_config(tmp_path, cfg), "--grid", "6", "3"], capsys)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "u,v,pattern_id" and len(lines) == 19
    assert err.strip().endswith("regions")


def test_regions_without_slice_uses_defaults(capsys):
    code, out, _ = run(["regions", "--preset", "shallow-4x4-two-block", "--grid", "3", "3"], capsys)
    assert code == 0 and len(out.splitlines()) == 10


def test_timing_flag(capsys):
    _, out, _ = run(["invariants", "--preset", "shallow-4x4-two-block", "--timing"], capsys)
    r = json.loads(out)
    VALIDATOR.validate(r)
    assert r["timing"]["seconds"] >= 0


def test_biased_network_skips_dimension_and_transform():
    cfg = get_preset("psi-example-51")
    cfg["architecture"]["bias"] = True
    report = json.loads(dumps(analyze(parse_config(cfg), STAGES)))
    VALIDATOR.validate(report)
    assert report["dimension"] is None
    assert any("offsets" in w for w in report["warnings"])


def test_parse_config_error_type():
    with pytest.raises(ConfigError):
        parse_config({"schema_version": "v1"})


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "relu_invariants", "preset", "--list"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "single-block-four-points" in res.stdout
