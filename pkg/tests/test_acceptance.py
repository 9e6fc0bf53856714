"""Acceptance criteria, one test each, checked through the full report pipeline.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""

import functools
import json
import random
import sys
import time


from relu_invariants.dimension import (
    expected_dimension_multi_block,
    expected_dimension_two_block,
    functional_dimension,
)
from relu_invariants.exact_linalg import MinorIndex, RationalMatrix
from relu_invariants.model import (
    Architecture,
    BlockPattern,
    Pattern,
    enumerate_active_paths,
    masked_matrix,
    path_matrix,
)
from relu_invariants.poly import Polynomial, minor_polynomial
from relu_invariants.presets import PRESETS, get_preset
from relu_invariants.report import STAGES, analyze, dumps, parse_config
from relu_invariants.transform import DatasetBlocks, psi_inverse
from relu_invariants.constraints import Cell, RankConstraint
from relu_invariants.verify import SampleSpec, check_vanishing, sample_params

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n, text, checks):
    failed = [k for k, ok in checks.items() if not ok]
    RESULTS[n] = (not failed, text + ("" if not failed else f" (failed: {', '.join(failed)})"))
    assert not failed, RESULTS[n][1]


@functools.lru_cache(maxsize=None)
def preset_run(name):
    start = time.perf_counter()
    report = json.loads(dumps(analyze(parse_config(get_preset(name)), STAGES)))
    return report, time.perf_counter() - start


def families(report):
    out = {}
    for c in report["constraints"]:
        out.setdefault(c["family"], []).append(c)
    return out


def all_hold(report):
    return report["summary"]["all_hold"] and report["summary"]["violations"] == 0


def test_criterion_1_single_block():
    r, _ = preset_run("single-block-four-points")
    sb = r["output_variety"]["single_block"]
    coeffs = {tuple(rel["coefficients"]) for rel in sb["linear"]}
    record(1, "single-block: 2 linear relations (8,-18,-2,7), 3 quadrics, 64 samples clean", {
        "two relations": len(sb["linear"]) == 2,
        "coefficients": coeffs == {("8", "-18", "-2", "7")},
        "three quadrics": sb["minors"]["count"] == 3 and sb["minors"]["minor_size"] == 2,
        "64 samples": sb["linear_verdict"]["samples_used"] == 64,
        "zero violations": sb["linear_verdict"]["violations"] == 0 and sb["minors"]["verdict"]["violations"] == 0,
    })


def test_criterion_2_shallow_444():
    r, _ = preset_run("shallow-4x4-two-block")
    st = r["pair_stats"][0]
    fam = families(r)
    dets = [c for c in r["constraints"] if c["minor_size"] == 4]
    d = r["dimension"]
    record(2, "shallow (4,4,4): stats (3,3,2,2), 2 determinants + 16 cubics, dimension 26/32, bounds 22..26", {
        "stats": (st["r1"], st["r2"], st["s"], st["t"]) == (3, 3, 2, 2),
        "determinants": len(dets) == 2 and all(c["count"] == 1 for c in dets),
        "cubics": [c["count"] for c in fam["type4"]] == [16] and fam["type4"][0]["minor_size"] == 3,
        "inventory": r["inventory"]["minors"] == 18,
        "dimension": (d["jacobian_rank"], d["ambient_dim"], d["expected"]) == (26, 32, 26),
        "bounds": (d["lower_bound"], d["upper_bound"]) == (22, 26),
        "verdicts": all_hold(r),
    })


def test_criterion_3_434():
    r, _ = preset_run("shallow-4-3-4-two-block")
    cubics = sum(c["count"] for c in r["constraints"] if c["minor_size"] == 3)
    by = {f: sum(c["count"] for c in cs) for f, cs in families(r).items()}
    record(3, "shallow (4,3,4): 48 cubics (32 + 16), dimension 21", {
        "48 cubics": cubics == 48,
        "32 + 16": by["type1"] + by["type2"] == 32 and by["type4"] == 16,
        "dimension": r["dimension"]["jacobian_rank"] == 21,
        "verdicts": all_hold(r),
    })


def test_criterion_4_dimension_drop():
    r, _ = preset_run("shallow-434-dimdrop")
    fam = families(r)
    d = r["dimension"]
    t4 = fam.get("type4", [])
    record(4, "(3,4,3) dimension drop: expected 18, observed 17, one cubic on M1 - M2 verifies", {
        "expected": d["expected"] == 18,
        "observed": d["jacobian_rank"] == 17,
        "single cubic": len(t4) == 1 and t4[0]["count"] == 1 and t4[0]["bound"] == 2,
        "verifies": bool(t4) and t4[0]["verdict"]["holds"],
    })


def test_criterion_5_deep_2222():
    r, _ = preset_run("deep-6-8")
    st = r["pair_stats"][0]
    record(5, "deep (2,2,2,2,2): r_a=2, r_b=1, s=1, t=3, types 1/2 only, dimension 6/8", {
        "stats": (st["r_a"], st["r_b"], st["s"], st["t"]) == (2, 1, 1, 3),
        "families": set(families(r)) <= {"type1", "type2"},
        "dimension": (r["dimension"]["jacobian_rank"], r["dimension"]["ambient_dim"]) == (6, 8),
        "verdicts": all_hold(r),
    })


def test_criterion_6_deep_33233():
    r, _ = preset_run("deep-33233-ex68")
    st = r["pair_stats"][0]
    fam = families(r)
    t4, t3 = fam.get("type4", []), fam.get("type3a", [])
    record(6, "(3,3,2,3,3): (1,0,2,1), 9 2-minors of M1 - M2, 3-minors of [M1|M2] verify, dimension 12/18", {
        "stats": (st["r_a"], st["r_b"], st["s"], st["t"]) == (1, 0, 2, 1),
        "difference": len(t4) == 1 and t4[0]["count"] == 9 and t4[0]["minor_size"] == 2,
        "side by side": len(t3) == 1 and t3[0]["minor_size"] == 3 and t3[0]["shape"] == [3, 6],
        "verify": all(c["verdict"]["holds"] for c in t3 + t4),
        "dimension": (r["dimension"]["jacobian_rank"], r["dimension"]["ambient_dim"]) == (12, 18),
    })


def test_criterion_7_tightness():
    r, _ = preset_run("deep-tightness-remark")
    diff = r["difference_ranks"][0]
    record(7, "(4,3,3,3,4): t = 4 holds, observed rank of M1 - M2 is 3, not tight", {
        "t": diff["t"] == 4,
        "holds": diff["holds"],
        "observed": diff["observed"] == 3,
        "not tight": diff["tight"] is False,
    })


def test_criterion_8_three_blocks():
    r, _ = preset_run("shallow-434-three-block")
    lams = {tuple(l) for l in r["lambdas"]}
    expected = {(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, -1), (1, -1, 0), (0, 1, -1)}
    t = [c for c in r["constraints"] if c["family"] == "block-T" and c["note"] == "layout=0,1;2,1"]
    d = r["dimension"]
    record(8, "(3,4,3) three blocks: six lambdas, T = [[M1,M2],[M3,M2]] bound 4, dimension 20/27", {
        "lambdas": lams == expected,
        "T bound": len(t) == 1 and t[0]["bound"] == 4,
        "T verifies": bool(t) and t[0]["verdict"]["holds"],
        "dimension": (d["jacobian_rank"], d["ambient_dim"]) == (20, 27),
    })


def test_criterion_9_455():
    r, _ = preset_run("multiblock-455-dim40")
    d = r["dimension"]
    record(9, "(4,5,5): expected = functional = 40 of 60, five row groups of rank 8", {
        "dimension": (d["expected"], d["jacobian_rank"], d["ambient_dim"]) == (40, 40, 60),
        "row groups": [g["rank"] for g in d["row_groups"]] == [8] * 5,
    })


def test_criterion_10_transform():
    arch = Architecture((2, 1, 2, 2))
    blocks = BlockPattern((Pattern(((1,), (1, 0))), Pattern(((1,), (0, 1)))))
    xs = (RationalMatrix.from_columns([[1, 1], [2, 3]], 2), RationalMatrix.from_columns([[1, 2], [3, 1]], 2))
    f3 = RankConstraint(((Cell.block(0, True), Cell.block(1, True)),), 1, "type3b")
    poly = minor_polynomial(psi_inverse(f3, DatasetBlocks(xs)), MinorIndex((0, 1), (1, 3)), arch, [2, 2])
    y = lambda b, i, j: ("Y", b, i, j)
    target = (Polynomial.var(y(0, 1, 0)) * Polynomial.var(y(1, 1, 0))).scale(7)
    target = target + Polynomial.var(y(0, 1, 0)) * Polynomial.var(y(1, 1, 1))
    target = target - (Polynomial.var(y(0, 1, 1)) * Polynomial.var(y(1, 1, 0))).scale(2)
    target = target - Polynomial.var(y(0, 1, 1)) * Polynomial.var(y(1, 1, 1))
    vanish = check_vanishing(poly, arch, blocks, xs, SampleSpec(num_samples=64))
    r51, _ = preset_run("psi-example-51")
    r53, _ = preset_run("psi-oversized-block")
    dep = {tuple(rel["coefficients"]) for rel in r53["output_variety"]["dependency_rows"]}
    record(10, "transform: f3 maps to 7y y + y y - 2y y - y y, vanishes on 64 samples; dependency rows (1,-4,1)", {
        "proportional": poly.ratio_to(target) is not None,
        "vanishes": vanish.holds and vanish.samples_used == 64,
        "preset transforms hold": r51["output_variety"]["summary"]["all_hold"],
        "dependency rows": dep == {("1", "-4", "1")},
        "dependency verdict": r53["output_variety"]["dependency_verdict"]["holds"],
    })


def _path_mask_agreement():
    rng = random.Random(111)
    for _ in range(100):
        arch = Architecture(tuple(rng.randint(1, 4) for _ in range(rng.randint(3, 5))))
        p = Pattern(tuple(tuple(rng.randint(0, 1) for _ in range(w)) for w in arch.hidden_widths))
        theta = sample_params(arch, SampleSpec(rng.randrange(2**32), 1), 0)
        if path_matrix(arch, theta, enumerate_active_paths(arch, p)) != masked_matrix(arch, theta, p)[0]:
            return False
    return True


def _shallow_regime():
    rng = random.Random(222)
    done = 0
    while done < 50:
        n1 = rng.randint(1, 4)
        arch = Architecture((rng.randint(n1, 5), n1, rng.randint(n1, 5)))
        a1, a2 = (Pattern((tuple(rng.randint(0, 1) for _ in range(n1)),)) for _ in range(2))
        if a1 == a2:
            continue
        da, db, dc, _ = expected_dimension_two_block(arch, a1, a2)
        if functional_dimension(arch, BlockPattern((a1, a2)), SampleSpec(done, 2)).jacobian_rank != da + db + dc:
            return False
        done += 1
    return True


def _multi_block_regime():
    rng = random.Random(333)
    done = 0
    while done < 25:
        n1 = rng.randint(2, 4)
        arch = Architecture((rng.randint(n1, 5), n1, rng.randint(n1, 5)))
        pats = {tuple(rng.randint(0, 1) for _ in range(n1)) for _ in range(rng.randint(3, 4))}
        if len(pats) < 3:
            continue
        blocks = BlockPattern(tuple(Pattern((p,)) for p in sorted(pats)))
        rank = functional_dimension(arch, blocks, SampleSpec(done, 2)).jacobian_rank
        if rank != expected_dimension_multi_block(arch, blocks):
            return False
        done += 1
    return True


def _every_preset_constraint_verifies():
    for name in PRESETS:
        r, seconds = preset_run(name)
        if not all_hold(r) or seconds >= 10:
            return False
        if any(not c["verdict"]["holds"] for c in r.get("constraints", [])):
            return False
    return True


def test_criterion_11_property_suites():
    record(11, "properties: path/mask x100, shallow regime x50, multi-block regime x25, presets clean", {
        "a path/mask": _path_mask_agreement(),
        "b shallow": _shallow_regime(),
        "c multi-block": _multi_block_regime(),
        "d presets": _every_preset_constraint_verifies(),
    })


def summary_lines():
    return [f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}" for n, (ok, text) in sorted(RESULTS.items())]


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(summary_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
