import csv
import json
import math
from pathlib import Path

import pytest

from pm25cast.cli import main

DEMO_DATA = Path(__file__).resolve().parent.parent / "demos" / "data"
OBS_2014 = str(DEMO_DATA / "obs_201401.csv")
NCEP_2017 = str(DEMO_DATA / "ncep_201712_6h.csv")
OBS_2017 = str(DEMO_DATA / "obs_201712.csv")


def run(*argv):
    """Invoke the CLI in-process; argparse usage errors surface as SystemExit."""
    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code


def run_quiet(*argv):
    """run() with stderr swallowed, for paths that intentionally fail."""
    import contextlib
    import io

    with contextlib.redirect_stderr(io.StringIO()):
        return run(*argv)


# ---------------------------------------------------------------- fit


def test_fit_writes_reports(tmp_path):
    out = tmp_path / "fit"
    code = run("fit", "--family", "with-id", "--out-dir", str(out), OBS_2014)
    assert code == 0
    trace = (out / "fit_trace.csv").read_text().strip().splitlines()
    assert trace[0].startswith("step,theta1")
    assert len(trace) >= 3

    residuals = list(csv.DictReader(open(out / "residuals.csv")))
    assert len(residuals) == 31
    assert set(residuals[0]) == {"date", "fitted", "residual", "std_residual"}

    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["fit"]["converged"] is True
    assert "curvature" in diag and "box_bias" in diag and "residuals" in diag
    assert diag["config"]["options"]["family"] == "with-id"
    hashes = diag["config"]["inputs"]
    assert len(hashes) == 1
    assert all(len(v) == 64 for v in hashes.values())


def test_fit_explicit_start_and_alpha(tmp_path):
    out = tmp_path / "fit2"
    code = run("fit", "--family", "initial", "--alpha", "0.01",
               "--start", "40,1,0,0,0,0", "--out-dir", str(out), OBS_2014)
    assert code == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["curvature"]["alpha"] == 0.01
    assert diag["config"]["options"]["start"] == "40,1,0,0,0,0"


def test_fit_non_convergence_exit_code(tmp_path):
    out = tmp_path / "fit3"
    code = run_quiet("fit", "--family", "with-id", "--max-steps", "0",
                     "--out-dir", str(out), OBS_2014)
    assert code == 2
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["fit"]["converged"] is False


def test_fit_missing_file_exit_code(tmp_path):
    assert run_quiet("fit", "--family", "with-id", "--out-dir", str(tmp_path),
                     str(tmp_path / "absent.csv")) == 1


def test_fit_bad_family_usage_error(tmp_path):
    assert run_quiet("fit", "--family", "bogus", "--out-dir", str(tmp_path), OBS_2014) == 1


def test_fit_iterated_requires_rho(tmp_path):
    assert run_quiet("fit", "--family", "iterated", "--out-dir", str(tmp_path), OBS_2014) == 1
    code = run("fit", "--family", "iterated", "--rho", "0.5",
               "--out-dir", str(tmp_path), OBS_2014)
    assert code == 0


def test_fit_bad_start_length(tmp_path):
    assert run_quiet("fit", "--family", "with-id", "--start", "1,2,3",
                     "--out-dir", str(tmp_path), OBS_2014) == 1


# ---------------------------------------------------------------- simulate


def test_simulate_reports(tmp_path):
    out = tmp_path / "sim"
    code = run("simulate", "--reps", "12", "--size", "25", "--seed", "3",
               "--out-dir", str(out), OBS_2014)
    assert code == 0
    rows = list(csv.DictReader(open(out / "replications.csv")))
    assert len(rows) == 12

    payload = json.loads((out / "simulation.json").read_text())
    assert payload["replications"] == 12
    assert len(payload["baseline"]["theta"]) == 7
    assert len(payload["corrected"]["theta"]) == 7
    assert payload["config"]["options"]["seed"] == 3
    base = payload["baseline"]["theta"]
    corr = payload["corrected"]["theta"]
    bias = payload["bias"]
    for b, c, d in zip(base, corr, bias):
        assert c == pytest.approx(b - d, rel=1e-9, abs=1e-12)


def test_simulate_deterministic_across_runs(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run("simulate", "--reps", "10", "--size", "20", "--seed", "41",
                   "--workers", "2", "--out-dir", str(out), OBS_2014) == 0
    assert (out1 / "replications.csv").read_text() == (out2 / "replications.csv").read_text()
    p1 = json.loads((out1 / "simulation.json").read_text())
    p2 = json.loads((out2 / "simulation.json").read_text())
    for key in ("bias", "std", "mse", "theta_corrected", "converged", "ks_pass"):
        assert p1[key] == p2[key]


def test_simulate_size_too_large(tmp_path):
    assert run_quiet("simulate", "--reps", "5", "--size", "999", "--seed", "1",
                     "--out-dir", str(tmp_path), OBS_2014) == 1


# ---------------------------------------------------------------- aggregate


def test_aggregate_ncep(tmp_path):
    out = tmp_path / "agg"
    assert run("aggregate-ncep", "--out-dir", str(out), NCEP_2017) == 0
    rows = list(csv.DictReader(open(out / "ncep_daily.csv")))
    assert len(rows) == 31
    first = rows[0]
    assert first["date"] == "2017-12-01"
    assert float(first["trg"]) == pytest.approx(29.0)
    assert float(first["w"]) == pytest.approx(24.287)
    # two days collapse to a zero range, one to a negative range
    assert float(rows[2]["trg"]) == 0.0
    assert float(rows[9]["trg"]) < 0.0


# ---------------------------------------------------------------- forecast


def test_forecast_pipeline(tmp_path):
    import contextlib
    import io

    out = tmp_path / "fc"
    stream = io.StringIO()
    with contextlib.redirect_stderr(stream):
        code = run("forecast", "--ncep", NCEP_2017, "--obs", OBS_2017,
                   "--model", "thesis-2018", "--profile", "ncep-i1",
                   "--id-algo", "1", "--out-dir", str(out))
    assert code == 0
    err = stream.getvalue()
    assert "2017-12-03" in err and "2017-12-15" in err

    rows = list(csv.DictReader(open(out / "forecast.csv")))
    assert len(rows) == 29
    by_date = {r["date"]: r for r in rows}
    assert by_date["2017-12-01"]["id_source"] == "algo2"
    assert by_date["2017-12-02"]["id_source"] == "algo1"
    assert "NEGATIVE_TRG" in by_date["2017-12-07"]["flags"]

    meta = json.loads((out / "forecast_meta.json").read_text())
    assert len(meta["skipped"]) == 2
    assert meta["config"]["options"]["profile"] == "ncep-i1"


def test_forecast_model_from_file(tmp_path):
    coef = tmp_path / "coef.json"
    coef.write_text(json.dumps({
        "a": 4.567223, "b": 0.34431, "c_w": -0.002258, "c_t": -0.000109,
        "c_pc": -0.000912, "c_ep": -0.005976, "c_id": 0.736975}))
    out = tmp_path / "fc"
    code = run_quiet("forecast", "--ncep", NCEP_2017, "--obs", OBS_2017,
                     "--model", str(coef), "--id-algo", "2", "--out-dir", str(out))
    assert code == 0
    rows = list(csv.DictReader(open(out / "forecast.csv")))
    assert all(r["id_source"] == "algo2" for r in rows)


def test_forecast_unknown_model(tmp_path):
    assert run_quiet("forecast", "--ncep", NCEP_2017, "--obs", OBS_2017,
                     "--model", "no-such-preset", "--out-dir", str(tmp_path)) == 1


# ---------------------------------------------------------------- validate


def test_validate_pipeline(tmp_path):
    fc = tmp_path / "fc"
    assert run_quiet("forecast", "--ncep", NCEP_2017, "--obs", OBS_2017,
                     "--model", "thesis-2018", "--profile", "ncep-i1",
                     "--out-dir", str(fc)) == 0
    out = tmp_path / "val"
    code = run("validate", "--out-dir", str(out),
               str(fc / "forecast.csv"), OBS_2017)
    assert code == 0
    payload = json.loads((out / "validation.json").read_text())
    assert payload["n"] == 29
    assert 0.0 <= payload["recorded"]["rate"] <= 1.0
    assert set(payload["profiles"]) == {"standard-i1", "standard-i2", "ncep-i1", "ncep-i2"}
    assert len(payload["config"]["inputs"]) == 2


def test_validate_unmatched_dates(tmp_path):
    fc_csv = tmp_path / "forecast.csv"
    fc_csv.write_text(
        "date,pm_hat,id_source,arm,lo,hi,flags\n"
        "2099-01-01,100.0,algo2,band,70.0,120.0,\n")
    assert run_quiet("validate", "--out-dir", str(tmp_path), str(fc_csv), OBS_2017) == 1


# ---------------------------------------------------------------- usage


def test_missing_subcommand_is_usage_error():
    assert run_quiet() == 1


def test_unknown_flag_is_usage_error(tmp_path):
    assert run_quiet("fit", "--nonsense", "--out-dir", str(tmp_path), OBS_2014) == 1
