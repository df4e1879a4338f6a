import csv
import io
import json

import pytest

from nlslog.cli import RunConfig, dispatch
from nlslog.report import ReportBundle, dumps, emit

COARSE = ["--L", "1", "--grid-ring", "200", "--grid-tail", "1000"]


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_period_scan_csv_is_decreasing():
    code, out, _ = call(["period-scan", "--from", "0.1", "--to", "2.6", "--points", "200"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["r0", "T", "Tprime", "r_plus", "E0"]
    T = [float(r["T"]) for r in rows]
    assert len(T) == 200 and all(a > b for a, b in zip(T, T[1:]))


def test_spectrum_laplacian_has_one_negative_eigenvalue():
    code, out, _ = call(["spectrum", "--operator", "laplacian", "--Z", "1", "--L", "1",
                         "--grid-ring", "500", "--grid-tail", "10000", "--R", "40", "--k", "3"])
    assert code == 0
    data = json.loads(out)
    assert data["morse_index"] == 1
    assert sum(v < 0 for v in data["eigenvalues"]) == 1
    assert data["eigenvalues"][0] == pytest.approx(data["diagnostics"]["minus_rho_squared"], rel=1e-3)


def test_spectrum_l2_json_and_eigenvector_csv(tmp_path):
    target = tmp_path / "l2.json"
    code, _, _ = call(["spectrum", "--operator", "L2", *COARSE, "--k", "3", "--eigvecs", "1",
                       "--out", str(target)])
    assert code == 0
    data = json.loads(target.read_text())
    assert {"eigenvalues", "morse_index", "nullity", "diagnostics"} <= set(data)
    assert (tmp_path / "l2_eigvec0.csv").read_text().startswith("edge_id,x,re,im\n")


def test_profile_bundle_schema_and_sidecar(tmp_path):
    target = tmp_path / "p.csv"
    assert call(["profile", *COARSE, "--c", "0.5", "--out", str(target)])[0] == 0
    assert target.read_text().splitlines()[0] == "edge_id,x,re,im"
    side = json.loads((tmp_path / "p.json").read_text())
    assert set(side) == {"c", "L", "r0", "a", "mass", "energy", "action"}
    assert side["c"] == 0.5


def test_same_config_twice_gives_identical_files(tmp_path):
    for name in ("a", "b"):
        assert call(["profile", *COARSE, "--out", str(tmp_path / f"{name}.csv")])[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NLSLOG_OUT_DIR", str(tmp_path))
    code, out, _ = call(["period-scan", "--from", "0.5", "--to", "1", "--points", "3"])
    assert code == 0 and out == ""
    assert (tmp_path / "period_scan.csv").exists()


def test_evolve_with_config_file_is_seeded(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"c": 0.0, "L": 1.0, "dt": 0.01, "t_end": 0.03, "eta": 0.01,
                               "n_trunc": 50, "grid": {"n_ring": 200, "n_tail": 1000}}))
    first = call(["evolve", "--config", str(cfg), "--seed", "3"])
    second = call(["evolve", "--config", str(cfg), "--seed", "3"])
    assert first[0] == 0 and first[1] == second[1]
    header, *rows = first[1].splitlines()
    assert header == "t,mass,energy,d" and len(rows) == 4


def test_usage_errors_exit_two(tmp_path):
    assert call(["spectrum", "--bogus"])[0] == 2
    assert call(["nonsense"])[0] == 2
    assert call([])[0] == 2
    assert call(["spectrum", "--operator", "L3"])[0] == 2
    code, _, err = call(["period-scan", "--from", "-1", "--to", "1", "--points", "3"])
    assert code == 2 and "r0" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"c": 0, "unknown": 1}))
    assert call(["evolve", "--config", str(bad)])[0] == 2


def test_numerical_failure_exits_one_with_json():
    code, _, err = call(["evolve", *COARSE, "--dt", "5", "--t-end", "10", "--eta", "0.1"])
    assert code == 1
    diag = json.loads(err)
    assert diag["error"] == "StepError" and "last_change" in diag["diagnostics"]


def test_verify_all_subset(tmp_path):
    code, out, _ = call(["verify-all", "--only", "2", "--out", str(tmp_path)])
    assert code == 0 and out.startswith("[PASS]  2")
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["all_passed"] is True
    for check in report["criteria"][0]["checks"]:
        assert "tolerance" in check
    assert call(["verify-all", "--only", "99"])[0] == 2


def test_empty_report_is_well_formed(tmp_path):
    emit(ReportBundle(), tmp_path)
    assert json.loads((tmp_path / "report.json").read_text()) == {}
    assert dumps([]) == "[]\n"


def test_dumps_is_deterministic_and_total():
    data = {"b": [1.0, float("nan"), float("inf")], "a": {"y": 0.1, "x": "s\n"}}
    text = dumps(data)
    assert text == dumps(dict(reversed(list(data.items()))))
    parsed = json.loads(text)
    assert parsed["b"] == [1, None, None] and list(parsed) == ["a", "b"]
    assert "0.10000000000000001" in text


def test_run_config_round_trip():
    cfg = RunConfig(command="evolve", c=1.5, dt=5e-4, eta=0.01, only=[1, 2], out="x")
    assert RunConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        RunConfig.from_json('{"bogus": 1}')
