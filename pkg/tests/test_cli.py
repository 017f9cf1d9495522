import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from legendrix import io
from legendrix.cli import main

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args])

    return invoke


def test_help_lists_subcommands(run):
    res = run("--help")
    assert res.exit_code == 0
    for name in ("algebra", "morse", "genericity", "forward", "invert", "roundtrip", "quantum", "report"):
        assert name in res.output


def test_algebra_and_morse(run, tmp_path):
    res = run("algebra", "--algebra", "su3", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    res = run("morse", "--form", "diag:1,2,3", "--mu", "1.0", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    reports = list(tmp_path.glob("*.json"))
    assert reports
    for p in reports:
        assert io.read_json(p)["schema_version"] == "1.0"


def test_genericity(run, tmp_path):
    res = run("genericity", "--algebra", "su2", "--forms", 10, "--seed", 7, "--out", tmp_path)
    assert res.exit_code == 0, res.output


def test_forward_matches_golden(run, tmp_path):
    res = run("forward", "--model", "sphere_s1", "--potential", "zero", "--mu-lo", 0.5, "--mu-hi", 2.5,
              "--mu-n", 5, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    header, rows = io.read_csv(tmp_path / "curve.csv")
    g_header, g_rows = io.read_csv(GOLDEN / "sphere_zero_curve.csv")
    assert header == g_header
    got = np.array(rows, dtype=float)
    want = np.array(g_rows, dtype=float)
    assert np.array_equal(got[:, 4:], want[:, 4:])
    assert np.allclose(got[:, :2], want[:, :2], rtol=1e-12, atol=0)
    assert np.allclose(got[:, 2], want[:, 2], rtol=0, atol=1e-9)
    assert np.allclose(got[:, 3], want[:, 3], rtol=1e-6, atol=0)


def test_forward_cp2_reports_spread(run, tmp_path):
    res = run("forward", "--model", "cp2_su2", "--potential", "zero", "--mu-lo", 0.1, "--mu-hi", 2.0,
              "--mu-n", 5, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    spread = float(res.output.split("relative spread")[1])
    assert spread <= 1e-6


def test_forward_is_deterministic(run, tmp_path):
    for d in ("a", "b"):
        assert run("forward", "--potential", "cosine", "--mu-n", 8, "--seed", 3, "--out", tmp_path / d).exit_code == 0
    for name in ("curve.csv", "curve.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_forward_then_invert(run, tmp_path):
    res = run("forward", "--model", "sphere_s1", "--potential", "affine", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    res = run("invert", "--curve", tmp_path / "curve.json", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rec = io.read_json(tmp_path / "reconstruction.json")
    assert rec["comparison"]["sup_error"] <= 1e-3


def test_roundtrip_command(run, tmp_path):
    res = run("roundtrip", "--model", "sphere_s1", "--mu-n", 60, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "sup-error" in res.output


def test_invalid_configuration_exits_2(run, tmp_path):
    assert run("forward", "--model", "torus", "--out", tmp_path).exit_code == 2
    assert run("forward", "--mu-lo", 2.0, "--mu-hi", 1.0, "--out", tmp_path).exit_code == 2
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"model": "sphere_s1", "tolerances": {"bogus": 1}}))
    assert run("forward", "--config", bad, "--out", tmp_path).exit_code == 2
    assert run("quantum", "--mu", -1, "--out", tmp_path).exit_code == 2


def test_numerical_failure_exits_3(run, tmp_path):
    # with V = 0 on CP^2 every minimizer sits on the boundary: nothing to invert
    assert run("forward", "--model", "cp2_su2", "--potential", "zero", "--mu-n", 10, "--out", tmp_path).exit_code == 0
    res = run("invert", "--curve", tmp_path / "curve.json", "--out", tmp_path)
    assert res.exit_code == 3
    diag = io.read_json(tmp_path / "diagnostic.json")
    assert diag["command"] == "invert" and diag["error_type"] == "InversionError"


def test_quantum_command(run, tmp_path):
    res = run("quantum", "--k-list", "10,20,40", "--weyl-k", "20,40", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    header, rows = io.read_csv(tmp_path / "quantum_scan.csv")
    assert header == ["k", "hbar", "lambda_min", "F", "gap"] and len(rows) == 3
    header, rows = io.read_csv(tmp_path / "weyl.csv")
    assert header == ["E", "qcount", "classical", "relerr"] and len(rows) == 2


def test_report_refuses_foreign_schema(run, tmp_path):
    (tmp_path / "stale.json").write_text(json.dumps({"schema_version": "0.9"}))
    res = run("report", "--only", "9", "--out", tmp_path)
    assert res.exit_code == 2


def test_report_marks_determinism_pending_then_checks_it(run, tmp_path):
    res = run("report", "--only", "9", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "[PASS]  9" in res.output and "[PENDING] 10" in res.output
    res = run("report", "--only", "9", "--out", tmp_path)
    assert "[PASS] 10" in res.output
    rep = io.read_json(tmp_path / "report.json")
    assert [c["criterion"] for c in rep["criteria"]] == [9, 10]
