import csv
import json
import subprocess
import sys

import pytest

from stochsym.cli import main


@pytest.fixture()
def ou_file(tmp_path):
    p = tmp_path / "ou.json"
    p.write_text(json.dumps({"drift": "-x", "sigma": "1", "domain": [-8, 8]}))
    return str(p)


@pytest.fixture()
def case_c_file(tmp_path):
    p = tmp_path / "caseC.json"
    p.write_text(json.dumps({"drift": "2 + 5*exp(-x)", "sigma": "1",
                             "domain": [-3, 3]}))
    return str(p)


@pytest.fixture()
def weber_file(tmp_path):
    p = tmp_path / "weber_example.json"
    p.write_text(json.dumps({"drift": "1/(x+sqrt(3)) - (x+sqrt(3))",
                             "sigma": "1", "domain": [-1, 3]}))
    return str(p)


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_classify_report(capsys, case_c_file):
    code, report = run_cli(capsys, ["classify", case_c_file, "--no-timestamp"])
    assert code == 0
    assert report["status"] == "ok"
    assert report["kind"] == "TypeC"
    assert report["beta"] == pytest.approx(-1.0)
    assert max(report["residuals"]) < 1e-8
    assert report["command"] == "classify"
    assert report["config"]["equation_file"] == case_c_file


def test_fp_classify_report(capsys, weber_file):
    code, report = run_cli(capsys, ["fp", "classify", weber_file, "--no-timestamp"])
    assert code == 0
    assert report["case"] == "CaseI"
    assert report["mu"][1] == pytest.approx(3.4641016151, rel=1e-9)


def test_missing_file_is_io_error(capsys, tmp_path):
    code, report = run_cli(capsys, ["classify", str(tmp_path / "missing.json"),
                                    "--no-timestamp"])
    assert code == 1
    assert report["status"] == "error"
    assert report["kind"] == "io"


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_service_error_propagates_as_exit_1(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"drift": "x^^2", "sigma": "1", "domain": [-1, 1]}))
    code, report = run_cli(capsys, ["classify", str(p), "--no-timestamp"])
    assert code == 1
    assert report["kind"] == "parse"


def test_reports_byte_identical_without_timestamp(capsys, ou_file):
    main(["simulate", ou_file, "--N", "500", "--dt", "0.01", "--T", "0.5",
          "--seed", "9", "--no-timestamp"])
    first = capsys.readouterr().out
    main(["simulate", ou_file, "--N", "500", "--dt", "0.01", "--T", "0.5",
          "--seed", "9", "--no-timestamp"])
    second = capsys.readouterr().out
    assert first == second


def test_timestamp_present_by_default(capsys, ou_file):
    code, report = run_cli(capsys, ["classify", ou_file])
    assert code == 0
    assert "timestamp" in report


def test_simulate_paths_csv(capsys, ou_file, tmp_path):
    out = tmp_path / "paths.csv"
    code, report = run_cli(capsys, [
        "simulate", ou_file, "--N", "3", "--dt", "0.1", "--T", "0.3",
        "--seed", "1", "--out", str(out), "--no-timestamp"])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["path_id", "t", "x"]
    assert len(rows) == 1 + 3 * 4  # header + N * (steps + 1)


def test_kozlov_csv(capsys, ou_file, tmp_path):
    out = tmp_path / "kz.csv"
    code, report = run_cli(capsys, [
        "kozlov", ou_file, "--seed", "3", "--dt", "0.1", "--T", "0.5",
        "--paths", "2", "--x0", "1.0", "--out", str(out), "--no-timestamp"])
    assert code == 0
    assert report["kind"] == "TypeB"
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["path_id", "t", "y", "x"]
    assert float(rows[1][3]) == pytest.approx(1.0)


def test_normalize_csv(capsys, tmp_path):
    eq = tmp_path / "scaled.json"
    eq.write_text(json.dumps({"drift": "-x", "sigma": "2", "domain": [-8, 8]}))
    out = tmp_path / "table.csv"
    code, report = run_cli(capsys, ["normalize", str(eq), "--samples", "5",
                                    "--out", str(out), "--no-timestamp"])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "xi"]
    x, xi = map(float, rows[1])
    assert xi == pytest.approx(x / 2)


def test_fp_solve_csv(capsys, ou_file, tmp_path):
    out = tmp_path / "dens.csv"
    code, report = run_cli(capsys, [
        "fp", "solve", ou_file, "--grid", "-8,8,81", "--dt", "0.01",
        "--T", "0.5", "--init", "gaussian:0.5,0.5", "--out", str(out),
        "--no-timestamp"])
    assert code == 0
    assert report["mass_drift"] < 1e-8
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "x", "u"]
    assert len(rows) == 1 + 81


def test_fp_verify_cli(capsys, tmp_path):
    heat = tmp_path / "heat.json"
    heat.write_text(json.dumps({"drift": "0", "sigma": "1", "domain": [-5, 5]}))
    field = tmp_path / "field.json"
    field.write_text(json.dumps({"tau": "0", "xi": "t", "phi1": "-x"}))
    code, report = run_cli(capsys, ["fp", "verify", str(heat), str(field),
                                    "--no-timestamp"])
    assert code == 0
    assert report["passes"] is True


def test_weber_gen_cli_with_negative_domain(capsys, tmp_path):
    out = tmp_path / "f.csv"
    code, report = run_cli(capsys, [
        "weber", "gen", "--mu", "0,3.4641016151377544,1", "--domain", "-1,3",
        "--samples", "9", "--out", str(out), "--no-timestamp"])
    assert code == 0
    assert report["lam"] == pytest.approx(1.0, abs=1e-12)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "f"]


def test_crossval_cli(capsys, ou_file):
    code, report = run_cli(capsys, [
        "crossval", ou_file, "--N", "20000", "--dt", "0.002", "--T", "1",
        "--seed", "6", "--grid", "-8,8,81", "--init", "gaussian:0,0.5",
        "--no-timestamp"])
    assert code == 0
    assert report["l1_distance"] < 0.06


def test_module_entry_point(ou_file):
    # the package is runnable as `python -m stochsym`
    proc = subprocess.run(
        [sys.executable, "-m", "stochsym", "classify", ou_file,
         "--no-timestamp"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    report = json.loads(proc.stdout)
    assert report["kind"] == "TypeB"
