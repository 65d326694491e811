from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
import yaml

from hausflow import MetricField
from hausflow.cli import main
from hausflow.io import load_field, save_field

from .conftest import CONFIG_DIR, ORACLE_DIR


def cfg_file(tmp_path, name="c.yaml", **overrides):
    base = yaml.safe_load((CONFIG_DIR / "arctan.yaml").read_text())
    base["window"]["resolution"] = 101
    for k, v in overrides.items():
        base[k] = v
    p = tmp_path / name
    p.write_text(yaml.safe_dump(base))
    return p


def report(path):
    return json.loads(path.read_text())


def test_run_converged_and_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_file(tmp_path)), "--out", str(out)]) == 0
    rep = report(out / "report.json")
    assert rep["verdict"]["kind"] == "converged"
    assert rep["schema_version"] == "1.0"
    assert rep["config"]["flow"]["tol"] == 1e-4  # defaults echoed
    lim = load_field(out / "limit.json")
    assert lim.values.shape[0] == rep["grid_points"]
    rows = list(csv.reader((out / "deltas.csv").open()))
    assert rows[0] == ["iteration", "delta", "min_increment", "core_diameter"]
    assert len(rows) - 1 == rep["verdict"]["iterations"]


def test_run_exit_codes(tmp_path):
    cube = cfg_file(tmp_path, "cube.yaml", base_metric={"kind": "cuberoot_pullback"})
    assert main(["run", "--config", str(cube), "--out", str(tmp_path / "c")]) == 3
    budget = cfg_file(tmp_path, "b.yaml", flow={"max_iter": 2})
    assert main(["run", "--config", str(budget), "--out", str(tmp_path / "b")]) == 4
    ident = CONFIG_DIR / "identity.yaml"
    assert main(["run", "--config", str(ident), "--out", str(tmp_path / "i")]) == 0
    assert report(tmp_path / "i" / "report.json")["verdict"]["iterations"] == 1


def test_run_with_iterates(tmp_path):
    p = cfg_file(tmp_path, flow={"max_iter": 2, "save_iterates": True})
    main(["run", "--config", str(p), "--out", str(tmp_path / "o")])
    assert sorted(f.name for f in (tmp_path / "o").glob("iterate_*.json")) == [
        "iterate_000.json", "iterate_001.json", "iterate_002.json"]


def test_usage_errors(tmp_path, capsys):
    assert main(["run"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("group: R1\nbase_metric: {kind: euclidean}\nwindow: {bounds: [[0, 1]], resolution: 1}\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "window/resolution" in capsys.readouterr().err
    assert main(["run", "--config", str(cfg_file(tmp_path)), "--threads", "0"]) == 2
    assert main(["run", "--config", str(cfg_file(tmp_path)), "--seed", str(2**64)]) == 2
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_runtime_error_exit_code(tmp_path, capsys):
    half = tmp_path / "half.yaml"
    half.write_text("group: T1\nbase_metric: {kind: chart_quotient}\n"
                    "generators: {elements: [[0], [0.5]]}\nwindow: {bounds: [[0, 1]], resolution: 8}\n")
    assert main(["run", "--config", str(half), "--out", str(tmp_path / "h")]) == 1
    assert "permutes" in capsys.readouterr().err


def test_determinism(tmp_path):
    p = cfg_file(tmp_path)
    for d in ("a", "b"):
        assert main(["run", "--config", str(p), "--out", str(tmp_path / d), "--seed", "7"]) == 0
        assert main(["verify", "--config", str(p), "--out", str(tmp_path / d), "--seed", "7"]) == 0
    for name in ("report.json", "limit.csv", "limit.json", "deltas.csv", "verify.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_verify_euclidean_all_pass(tmp_path):
    out = tmp_path / "v"
    code = main(["verify", "--config", str(CONFIG_DIR / "euclidean.yaml"), "--out", str(out)])
    rep = report(out / "verify.json")
    assert code == 0 and rep["failed"] == []
    names = {p["name"] for p in rep["properties"]}
    assert {"symmetric", "triangle", "monotone", "upper_bound", "epsilon_midpoints",
            "right_invariance", "finsler_symmetry", "finsler_homogeneity", "finsler_bound"} <= names


def test_verify_corrupted_field_fails_with_pair(tmp_path, capsys):
    src = tmp_path / "run"
    main(["run", "--config", str(cfg_file(tmp_path)), "--out", str(src)])
    lim = load_field(src / "limit.json")
    v = lim.values.copy()
    v[3, 11] += 0.25
    save_field(MetricField(lim.grid, v, "corrupted"), tmp_path / "bad")
    code = main(["verify", "--field", str(tmp_path / "bad.json"), "--out", str(tmp_path / "vb")])
    assert code == 5
    rep = report(tmp_path / "vb" / "verify.json")
    sym = next(p for p in rep["properties"] if p["name"] == "symmetric")
    assert not sym["passed"] and sorted(sym["witness"]) == [3, 11]
    assert "FAIL symmetric" in capsys.readouterr().out


def test_verify_cuberoot_skips_inapplicable(tmp_path):
    p = cfg_file(tmp_path, base_metric={"kind": "cuberoot_pullback"})
    main(["verify", "--config", str(p), "--out", str(tmp_path / "v")])
    rep = report(tmp_path / "v" / "verify.json")
    skipped = {p["name"] for p in rep["properties"] if p.get("skipped")}
    assert {"upper_bound", "epsilon_midpoints", "right_invariance"} <= skipped


def test_semigroup_command(tmp_path):
    out = tmp_path / "s"
    assert main(["semigroup", "--config", str(CONFIG_DIR / "words_unit_interval.yaml"), "--out", str(out)]) == 0
    cert = report(out / "certificate.json")
    assert cert["isotropy_trivial"] and cert["bracket_generating"]
    assert sorted(x[0] for x in cert["X"]) == [-1.0, 0.0, math.sqrt(2)]
    rows = list(csv.DictReader((out / "semigroup.csv").open()))
    assert float(rows[0]["covering_radius"]) == pytest.approx(0.2071068, abs=1e-6)


def test_semigroup_certificates(tmp_path):
    out = tmp_path / "h"
    assert main(["semigroup", "--config", str(CONFIG_DIR / "heisenberg_horizontal.yaml"), "--out", str(out)]) == 0
    cert = report(out / "certificate.json")
    assert cert["bracket_generating"] and cert["bracket_closure_dimension"] == 3 and cert["isotropy_trivial"]
    half = tmp_path / "half.yaml"
    half.write_text("group: T1\nbase_metric: {kind: chart_quotient}\n"
                    "generators: {elements: [[0], [0.5]]}\nwindow: {bounds: [[0, 1]], resolution: 8}\n")
    assert main(["semigroup", "--config", str(half), "--out", str(tmp_path / "t")]) == 0
    assert report(tmp_path / "t" / "certificate.json")["isotropy_trivial"] is False


def test_finsler_command(tmp_path):
    out = tmp_path / "f"
    assert main(["finsler", "--config", str(cfg_file(tmp_path)), "--out", str(out)]) == 0
    rep = report(out / "finsler.json")
    vals = [e["value"] for e in rep["norm_table"]["estimates"]]
    assert vals == pytest.approx([1, 1, 2, 2], rel=0.02)
    assert all(s["ok"] for s in rep["symmetry"])
    rows = list(csv.DictReader((out / "norm_table.csv").open()))
    assert [r["diverged"] for r in rows] == ["0"] * 4


def test_oracle_command_reproduces_committed_files(tmp_path):
    assert main(["oracle", "all", "--out", str(tmp_path)]) == 0
    for ref in sorted(ORACLE_DIR.glob("*.json")):
        assert (tmp_path / ref.name).read_bytes() == ref.read_bytes(), ref.name
    with pytest.raises(SystemExit):
        main(["oracle", "no-such-case"])


def test_threads_do_not_change_results(tmp_path):
    p = cfg_file(tmp_path, flow={"method": "dijkstra"})
    main(["run", "--config", str(p), "--out", str(tmp_path / "t1")])
    main(["run", "--config", str(p), "--out", str(tmp_path / "t4"), "--threads", "4"])
    a = load_field(tmp_path / "t1" / "limit.json").values
    b = load_field(tmp_path / "t4" / "limit.json").values
    assert np.array_equal(a, b)
