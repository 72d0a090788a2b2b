import json
import math
import shutil

import numpy as np
import pytest

from charnets import cli
from conftest import FIXTURES

CLI = FIXTURES / "cli"


def run(cmd, config, out, *extra):
    return cli.main([cmd, "--config", str(config), "--out", str(out), *extra])


def load(p):
    return json.loads(p.read_text())


def test_constant_goursat_matches_golden(tmp_path):
    assert run("solve-goursat", CLI / "goursat_constant.json", tmp_path) == 0
    assert (tmp_path / "grid.json").read_bytes() == (CLI / "golden" / "grid_constant.json").read_bytes()
    doc = load(tmp_path / "grid.json")
    assert doc["reference"]["levels"][0]["max_error"] <= 1e-12
    assert (tmp_path / "grid.csv").read_text().startswith("i,j,t1,t2,x,y,R1,R2,theta,status\n")
    assert (tmp_path / "grid.svg").read_text().startswith("<svg")


def test_spiral_goursat_reports_order_two(tmp_path):
    assert run("solve-goursat", CLI / "goursat_spiral.json", tmp_path) == 0
    ratios = load(tmp_path / "grid.json")["reference"]["ratios"]
    assert len(ratios) == 2
    assert all(abs(r - 4) < 0.6 for r in ratios)


def test_blowup_goursat_exits_3_with_front(tmp_path):
    assert run("solve-goursat", CLI / "goursat_blowup.json", tmp_path) == 3
    doc = load(tmp_path / "grid.json")
    assert doc["status"] == "fold" and doc["fold_front"]
    # fold no later than K / kappa = 2 / 2
    assert min(f["t2"] for f in doc["fold_front"]) <= 1.1


def test_audit_spiral_passes(tmp_path):
    assert run("audit", CLI / "audit_spiral.json", tmp_path) == 0
    rep = load(tmp_path / "report.json")
    assert rep["pass"] and not rep["checks"]["quasi_hp_ratio"]["vacuous"]


def test_audit_constant_marks_vacuous(tmp_path):
    assert run("audit", CLI / "audit_constant.json", tmp_path) == 0
    checks = load(tmp_path / "report.json")["checks"]
    assert checks["curvature_bound"]["vacuous"] and checks["blowup_residual"]["vacuous"]
    assert all(c["pass"] for c in checks.values())


def test_audit_corrupted_grid_fails_with_witness(tmp_path):
    assert run("audit", CLI / "audit_grid.json", tmp_path / "ok") == 0
    assert run("audit", CLI / "audit_corrupted.json", tmp_path / "bad") == 1
    rep = load(tmp_path / "bad" / "report.json")
    assert not rep["checks"]["grid_alignment"]["pass"]
    assert rep["witnesses"]["grid_alignment"]["node"] in ([5, 4], [4, 4], [7, 2], [7, 1])


def test_construct_depth1(tmp_path):
    assert run("construct-singular", CLI / "construct_depth1.json", tmp_path) == 0
    tree = load(tmp_path / "tree.json")
    assert [len(lv) for lv in tree["levels"]] == [1, 2]
    summary = (tmp_path / "summary.txt").read_text()
    assert "pass  angle shift g1" in summary and "pass  angle shift g2" in summary
    assert "FAIL" not in summary
    manifest = load(tmp_path / "patches" / "manifest.json")
    assert all((tmp_path / "patches" / p["file"]).is_file() for p in manifest["patches"])


def test_construct_rejects_large_epsilon(tmp_path, capsys):
    out = tmp_path / "never"
    assert run("construct-singular", CLI / "construct_bad_epsilon.json", out) == 2
    assert not out.exists()
    assert "construct_bad_epsilon.json:3" in capsys.readouterr().err


def test_dim_middle_thirds(tmp_path):
    assert run("dim", CLI / "dim_middle_thirds.json", tmp_path) == 0
    doc = load(tmp_path / "estimate.json")
    assert doc["estimate"]["slope"] == pytest.approx(math.log(2) / math.log(3), abs=0.05)
    assert doc["reference"]["cantor_tau"] == pytest.approx(0.630929753571)
    assert doc["falconer"]["pass"]


def test_dim_one_interval(tmp_path):
    assert run("dim", CLI / "dim_one_interval.json", tmp_path) == 0
    doc = load(tmp_path / "estimate.json")
    assert doc["estimate"]["slope"] == pytest.approx(1.0, abs=0.05)
    assert doc["reference"] is None


def test_dim_on_constructed_tree(tmp_path):
    assert run("construct-singular", CLI / "construct_depth3.json", tmp_path / "c") == 0
    cfg = tmp_path / "dim.json"
    cfg.write_text(json.dumps({"input": str(tmp_path / "c" / "tree.json")}))
    assert run("dim", cfg, tmp_path / "d") == 0
    doc = load(tmp_path / "d" / "estimate.json")
    assert doc["estimate"]["slope"] >= doc["reference"]["cantor_tau"] - 0.1
    assert doc["falconer"]["min_sum"] >= 0.5


def test_oracle_eval(tmp_path):
    assert run("oracle-eval", CLI / "oracle_eval.json", tmp_path) == 0
    doc = load(tmp_path / "values.json")
    assert (doc["oracle"]["m1"], doc["oracle"]["m2"]) == (2.0, 0.5)
    assert doc["values"][-1]["error"] == "FieldGap" or "error" in doc["values"][-1]


def test_trace_net(tmp_path):
    assert run("trace-net", CLI / "trace_spiral.json", tmp_path) == 0
    doc = load(tmp_path / "net.json")
    assert [c["k"] for c in doc["curves"]] == [1, 2, 1, 2]
    assert (tmp_path / "net.svg").is_file()


@pytest.mark.parametrize("text, line, fragment", [
    ('{\n  "system": {"kind": "cps", "m1": 2, "m2": 1},\n  "bogus": 1\n}', 3, "bogus"),
    ('{\n  "epsilon": 0.02,\n  "depth": 9\n}', 3, "depth"),
    ('{\n  "epsilon": 0.02,\n  "depth": 1,\n}', 4, "invalid JSON"),
    ('{\n  "system": {\n    "kind": "cps",\n    "m1": 2\n  }\n}', 2, "m2"),
])
def test_config_errors_are_line_precise(tmp_path, capsys, text, line, fragment):
    cfg = tmp_path / "bad.json"
    cfg.write_text(text)
    assert run("construct-singular", cfg, tmp_path / "out") == 2
    err = capsys.readouterr().err
    assert f"bad.json:{line}:" in err and fragment in err
    assert not (tmp_path / "out").exists()


def test_missing_curve_file_is_config_error(tmp_path):
    cfg = json.loads((CLI / "goursat_constant.json").read_text())
    cfg["curve1"] = {"file": "nowhere.json"}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg, indent=1))
    assert run("solve-goursat", p, tmp_path / "o") == 2


def test_curve_file_input(tmp_path):
    from charnets.curves import Curve
    cfg = json.loads((CLI / "goursat_constant.json").read_text())
    (tmp_path / "c1.json").write_text(json.dumps(Curve.segment(0j, 0.0, 0.5, 0.05).to_json()))
    cfg["curve1"] = {"file": "c1.json"}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert run("solve-goursat", p, tmp_path / "o") == 0


def test_threads_flag_validated(tmp_path):
    assert run("audit", CLI / "audit_constant.json", tmp_path, "--threads", "0") == 2
    assert run("audit", CLI / "audit_constant.json", tmp_path / "a", "--threads", "3") == 0
    assert run("audit", CLI / "audit_constant.json", tmp_path / "b", "--threads", "1") == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_clean_rounds_to_12_digits():
    assert cli.dumps({"x": 1 / 3, "n": float("nan")}) == '{\n "n": null,\n "x": 0.333333333333\n}\n'
