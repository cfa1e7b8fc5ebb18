import json

import numpy as np
import pytest

from fiberlab import cli
from fiberlab.cech import clutching_cocycle, cocycle_to_json, model_cover
from fiberlab.fields import FieldGrid, model_points
from fiberlab.geometry import get_model
from fiberlab.moduli import slope_fibering


def run(capsys, args):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def error_code(err_text):
    return json.loads(err_text)["error"]


def test_classify_elliptic_row(capsys):
    code, out, err = run(capsys, ["classify", "--base", "S2", "--euler", "2"])
    assert code == 0 and err == ""
    assert "total L(2,1)" in out
    assert "core S2 ⊔ S2" in out


def test_classify_circle_base_rejects_twisting(capsys):
    code, out, err = run(capsys, ["classify", "--base", "S1", "--euler", "1"])
    assert code == 2 and out == ""
    assert error_code(err) == "InvalidEuler"


def test_unknown_subcommand(capsys):
    code, out, err = run(capsys, ["frobnicate"])
    assert code == 2
    assert error_code(err) == "UnknownSubcommand"


def test_missing_option_is_bad_config(capsys):
    code, _, err = run(capsys, ["classify", "--base"])
    assert code == 2
    assert error_code(err) == "BadConfig"


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    out = capsys.readouterr().out
    assert "selftest" in out


def test_heatflow_csv(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    args = ["heatflow", "--grid", "64", "--seed", "11", "--t-samples", "5"]
    assert cli.main(args + ["--out", str(out_a)]) == 0
    assert cli.main(args + ["--out", str(out_b)]) == 0
    text = out_a.read_text()
    assert out_b.read_text() == text
    lines = text.strip().split("\n")
    assert lines[0] == "t,sup_displacement,min_derivative"
    assert len(lines) == 6
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == 1.0
    assert last[2] == pytest.approx(1.0, abs=1e-9)


def test_euler_reads_cocycle_file(tmp_path, capsys):
    cover = model_cover("S2", 64)
    tau = clutching_cocycle(cover, -3, perturbation=0.08)
    path = tmp_path / "tau.json"
    path.write_text(cocycle_to_json(tau))
    code, out, err = run(capsys, ["euler", "--cocycle", str(path)])
    assert code == 0
    assert out.strip() == "-3"


def test_transport_hits_base_target(tmp_path, capsys):
    start = tmp_path / "q.json"
    target = tmp_path / "x.json"
    start.write_text(json.dumps([1.0, 0.0, 0.0, 0.0]))
    target.write_text(json.dumps([0.8, 0.6, 0.0]))
    code, out, err = run(
        capsys,
        ["transport", "--model", "hopf", "--from", str(start), "--to", str(target)],
    )
    assert code == 0
    moved = np.array(json.loads(out))
    model = get_model("hopf")
    assert np.linalg.norm(model.project(moved) - [0.8, 0.6, 0.0]) < 1e-9


def test_transport_rejects_wrong_shape(tmp_path, capsys):
    start = tmp_path / "q.json"
    target = tmp_path / "x.json"
    start.write_text(json.dumps([1.0, 0.0, 0.0]))
    target.write_text(json.dumps([0.0, 0.0, 1.0]))
    code, _, err = run(
        capsys,
        ["transport", "--model", "hopf", "--from", str(start), "--to", str(target)],
    )
    assert code == 2
    assert error_code(err) == "BadConfig"


def test_split_field_outputs_and_report(tmp_path, capsys):
    rng = np.random.default_rng(3)
    pts = model_points("flat2", 8, 16)
    grid = FieldGrid("flat2", pts, rng.normal(size=pts.shape))
    field_path = tmp_path / "field.json"
    field_path.write_text(json.dumps(grid.to_json()))
    shadow_path = tmp_path / "shadow.json"
    fair_path = tmp_path / "fair.json"
    code, out, err = run(capsys, [
        "split-field", "--in", str(field_path),
        "--shadow-out", str(shadow_path), "--fair-out", str(fair_path),
        "--report",
    ])
    assert code == 0
    report = dict(line.split(" ", 1) for line in out.strip().split("\n"))
    assert abs(float(report["cross_normalized"])) < 1e-8
    assert report["shadow_projectable"] == "true"
    shadow = FieldGrid.from_json(json.loads(shadow_path.read_text()))
    fair = FieldGrid.from_json(json.loads(fair_path.read_text()))
    np.testing.assert_allclose(
        shadow.vectors + fair.vectors, grid.vectors, atol=1e-12
    )


def test_straighten_recovers_vertical_fibering(tmp_path, capsys):
    fib = slope_fibering(0, 1, 4, 64, amp=0.03)
    fib_path = tmp_path / "fib.json"
    fib_path.write_text(json.dumps(fib.to_json()))
    report_path = tmp_path / "resid.csv"
    out_path = tmp_path / "straight.json"
    code, _, err = run(capsys, [
        "straighten", "--in", str(fib_path), "--model", "flat2",
        "--passes", "4", "--report", str(report_path), "--out", str(out_path),
    ])
    assert code == 0
    lines = report_path.read_text().strip().split("\n")
    assert lines[0] == "pass,residual"
    assert float(lines[-1].split(",")[1]) < 1e-12
    code, out, _ = run(capsys, ["slope", "--in", str(out_path)])
    assert code == 0
    assert out.strip() == "0,1"


def test_straighten_model_mismatch(tmp_path, capsys):
    fib = slope_fibering(0, 1, 3, 32, amp=0.01)
    fib_path = tmp_path / "fib.json"
    fib_path.write_text(json.dumps(fib.to_json()))
    code, _, err = run(
        capsys, ["straighten", "--in", str(fib_path), "--model", "flat3"]
    )
    assert code == 2
    assert error_code(err) == "BadConfig"


def test_slope_accepts_shape_and_array(tmp_path, capsys):
    fib = slope_fibering(1, 2, 4, 64, amp=0.02)
    shape_path = tmp_path / "shape.json"
    shape_path.write_text(json.dumps(
        {"model": "flat2", "samples": fib.fibers[0].tolist()}
    ))
    code, out, _ = run(capsys, ["slope", "--in", str(shape_path)])
    assert code == 0 and out.strip() == "1,2"
    array_path = tmp_path / "loop.json"
    array_path.write_text(json.dumps(fib.fibers[1].tolist()))
    code, out, _ = run(
        capsys, ["slope", "--in", str(array_path), "--model", "flat2"]
    )
    assert code == 0 and out.strip() == "1,2"
    code, _, err = run(capsys, ["slope", "--in", str(array_path)])
    assert code == 2
    assert error_code(err) == "BadConfig"


def test_karcher_brute_cross_check(tmp_path, capsys):
    fib = slope_fibering(0, 1, 4, 64, amp=0.03)
    shape_path = tmp_path / "shape.json"
    shape_path.write_text(json.dumps(
        {"model": "flat2", "samples": fib.fibers[0].tolist()}
    ))
    code, out, _ = run(capsys, [
        "karcher", "--in", str(shape_path), "--brute", "--nodes", "120",
    ])
    assert code == 0
    payload = json.loads(out)
    assert len(payload["center"]) == 1
    # window radius is about 1.05 * spread; one grid cell of 120 nodes
    cell = 2.0 * 1.05 * 0.03 / 119
    assert payload["distance"] <= 2.0 * cell


def test_csf_trace(tmp_path, capsys):
    args = [
        "csf", "--slope", "0,1", "--fibers", "4", "--points", "64",
        "--amp", "0.02", "--t-final", "0.05", "--record-every", "200",
    ]
    code, out, err = run(capsys, args)
    assert code == 0 and err == ""
    lines = out.strip().split("\n")
    assert lines[0] == "t,length,max_kappa,min_pair_dist"
    first = [float(v) for v in lines[1].split(",")]
    last = [float(v) for v in lines[-1].split(",")]
    assert last[2] < first[2]
    assert all(float(line.split(",")[3]) > 0 for line in lines[1:])
    code2, out2, _ = run(capsys, args)
    assert code2 == 0 and out2 == out


def test_csf_rejects_imprimitive_slope(capsys):
    code, _, err = run(capsys, ["csf", "--slope", "2,4", "--fibers", "3",
                                "--points", "32", "--t-final", "0.001"])
    assert code == 2
    assert error_code(err) == "NonPrimitive"


def test_selftest_passes(capsys):
    code, out, err = run(capsys, ["selftest", "--seed", "7"])
    assert code == 0 and err == ""
    assert out.count("PASS") == len(cli._SELFTESTS)
    assert "FAIL" not in out


def test_selftest_failure_exits_two(capsys, monkeypatch):
    def boom(seed):
        raise AssertionError("forced failure")

    monkeypatch.setattr(cli, "_SELFTESTS", [("forced", boom)])
    code, out, err = run(capsys, ["selftest"])
    assert code == 2
    assert "FAIL  forced" in out
    assert error_code(err) == "SelftestFailure"
