import json

import numpy as np
import pytest

from noiseball.bounds import derive_constants, propagated_envelopes
from noiseball.cli import (main, read_bounds_csv, read_series_csv,
                           write_bounds_csv, write_series_csv)
from noiseball.constants import problem_constants
from noiseball.engine import ErrorSeries
from noiseball.problems import toy_two_component
from noiseball.verify import VerifyUsageError


@pytest.fixture
def toy_spec(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(
        {"type": "linear_regression", "X": [[1.0, 1.0]], "y": [1.0, -1.0]}))
    return path


@pytest.fixture
def quartic_spec(tmp_path):
    path = tmp_path / "quartic.json"
    path.write_text(json.dumps({"type": "quartic"}))
    return path


def test_series_csv_round_trip(tmp_path):
    series = ErrorSeries(r_hat=np.array([0.0, 0.25, 1.0 / 3.0]),
                         std_err=np.array([0.0, 0.01, 0.02]),
                         exact=False, meta={"eta": 0.1})
    path = tmp_path / "s.csv"
    write_series_csv(path, series)
    back = read_series_csv(path)
    assert np.array_equal(back.r_hat, series.r_hat)  # repr round-trips exactly
    assert np.array_equal(back.std_err, series.std_err)
    assert back.exact is False
    assert back.meta["eta"] == 0.1


def test_series_csv_header_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(VerifyUsageError):
        read_series_csv(path)


def test_bounds_csv_round_trip(tmp_path):
    c = derive_constants(problem_constants(toy_two_component()), 0.1)
    env = propagated_envelopes(c, 4.0, 20)
    path = tmp_path / "b.csv"
    write_bounds_csv(path, 21, {"prop": env})
    back = read_bounds_csv(path)
    assert set(back) == {"prop"}
    assert np.array_equal(back["prop"].lower, env.lower)
    assert np.array_equal(back["prop"].upper, env.upper)


def test_bounds_csv_infinite_upper_round_trip(tmp_path):
    from noiseball.problems import quartic_problem
    c = derive_constants(problem_constants(quartic_problem()), 1.0 / 216.0)
    env = propagated_envelopes(c, 9.0, 10)
    path = tmp_path / "b.csv"
    write_bounds_csv(path, 11, {"prop": env})
    back = read_bounds_csv(path)
    assert np.all(np.isinf(back["prop"].upper[1:]))  # empty fields -> +inf


def test_constants_command(toy_spec, capsys):
    assert main(["constants", str(toy_spec)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lambda_max_0"] == pytest.approx(1.0)
    assert out["lambda_min"] == pytest.approx(1.0)
    assert out["D0"] == pytest.approx(1.0)


def test_constants_command_bad_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["constants", str(bad)]) == 2


def test_simulate_command(toy_spec, tmp_path):
    out = tmp_path / "series.csv"
    code = main(["simulate", str(toy_spec), "--eta", "0.1", "--iters", "50",
                 "--trials", "32", "--out", str(out)])
    assert code == 0
    series = read_series_csv(out)
    assert len(series) == 51
    assert series.r_hat[0] == 0.0
    assert not series.exact


def test_simulate_theta0_dimension_check(toy_spec, tmp_path):
    code = main(["simulate", str(toy_spec), "--eta", "0.1", "--iters", "5",
                 "--trials", "4", "--theta0", "1,2",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_simulate_divergence_exit_code(toy_spec, tmp_path):
    code = main(["simulate", str(toy_spec), "--eta", "50", "--iters", "5000",
                 "--trials", "4", "--theta0", "1",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 1


def test_oracle_methods_agree(toy_spec, tmp_path):
    enum_out = tmp_path / "enum.csv"
    quad_out = tmp_path / "quad.csv"
    for method, out in (("enumerate", enum_out), ("quadratic", quad_out)):
        code = main(["oracle", str(toy_spec), "--eta", "0.1", "--kmax", "12",
                     "--theta0", "2", "--method", method, "--out", str(out)])
        assert code == 0
    a, b = read_series_csv(enum_out), read_series_csv(quad_out)
    assert a.exact and b.exact
    assert np.max(np.abs(a.r_hat - b.r_hat)) < 1e-12


def test_oracle_guard_exit_code(toy_spec, tmp_path):
    code = main(["oracle", str(toy_spec), "--eta", "0.1", "--kmax", "64",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_bounds_command_ledger_sidecar(toy_spec, tmp_path):
    out = tmp_path / "bounds.csv"
    code = main(["bounds", str(toy_spec), "--eta", "0.1", "--r0", "4",
                 "--iters", "100", "--mode", "cf", "--out", str(out)])
    assert code == 0
    side = json.loads((tmp_path / "bounds.csv.constants.json").read_text())
    assert side["C0"] == pytest.approx(0.288007, abs=1e-6)
    assert side["K0"] == 22
    assert side["z0_sq"] == pytest.approx(0.032087, abs=1e-6)


def test_bounds_command_inadmissible_eta(toy_spec, tmp_path):
    code = main(["bounds", str(toy_spec), "--eta", "2.0",
                 "--out", str(tmp_path / "b.csv")])
    assert code == 2


def test_verify_pipeline_end_to_end(toy_spec, tmp_path):
    series = tmp_path / "series.csv"
    bounds = tmp_path / "bounds.csv"
    assert main(["oracle", str(toy_spec), "--eta", "0.1", "--kmax", "400",
                 "--theta0", "2", "--method", "quadratic",
                 "--out", str(series)]) == 0
    assert main(["bounds", str(toy_spec), "--eta", "0.1", "--r0", "4",
                 "--iters", "400", "--mode", "prop", "--out", str(bounds)]) == 0
    code = main(["verify", "--series", str(series), "--bounds", str(bounds),
                 "--constants", str(bounds) + ".constants.json"])
    assert code == 0


def test_verify_detects_fabricated_series(toy_spec, tmp_path, capsys):
    bounds = tmp_path / "bounds.csv"
    assert main(["bounds", str(toy_spec), "--eta", "0.1", "--r0", "4",
                 "--iters", "400", "--mode", "prop", "--out", str(bounds)]) == 0
    fake = tmp_path / "fake.csv"
    write_series_csv(fake, ErrorSeries(
        r_hat=np.zeros(401), std_err=np.zeros(401), exact=True, meta={}))
    code = main(["verify", "--series", str(fake), "--bounds", str(bounds),
                 "--constants", str(bounds) + ".constants.json"])
    assert code == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "fail"


def test_verify_length_mismatch_is_usage_error(toy_spec, tmp_path):
    series = tmp_path / "series.csv"
    bounds = tmp_path / "bounds.csv"
    assert main(["oracle", str(toy_spec), "--eta", "0.1", "--kmax", "400",
                 "--method", "quadratic", "--out", str(series)]) == 0
    assert main(["bounds", str(toy_spec), "--eta", "0.1", "--iters", "30",
                 "--mode", "prop", "--out", str(bounds)]) == 0
    code = main(["verify", "--series", str(series), "--bounds", str(bounds),
                 "--constants", str(bounds) + ".constants.json"])
    assert code == 2


def test_reproduce_unknown_recipe(tmp_path):
    assert main(["reproduce", "bogus", "--out-dir", str(tmp_path)]) == 2


def test_unknown_subcommand_is_usage_error():
    assert main(["frobnicate"]) == 2


def test_reproduce_quartic_small(tmp_path):
    out_dir = tmp_path / "rq"
    code = main(["reproduce", "quartic", "--out-dir", str(out_dir),
                 "--iters", "300", "--trials", "64", "--tail", "0.5"])
    assert code == 0
    payload = json.loads((out_dir / "quartic_report.json").read_text())
    assert payload["status"] == "pass"
    extras = payload["extras"]
    # started at +2: trapped near the local minimum at 0.5
    assert abs(extras["theta0_p2"]["median_final_theta"] - 0.5) < 0.1
    # started at -2: settled near the global minimum at -1
    assert abs(extras["theta0_m2"]["median_final_theta"] + 1.0) < 0.1


def test_backend_flag_pure(toy_spec, tmp_path, monkeypatch):
    out = tmp_path / "pure.csv"
    code = main(["--backend", "pure", "simulate", str(toy_spec), "--eta", "0.1",
                 "--iters", "40", "--trials", "16", "--out", str(out)])
    assert code == 0
    meta = json.loads((tmp_path / "pure.csv.meta.json").read_text())
    assert meta["backend"] == "pure"
    monkeypatch.delenv("NOISEBALL_BACKEND", raising=False)
    import importlib

    from noiseball import backends
    importlib.reload(backends)
