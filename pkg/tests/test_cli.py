import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qlyap.cli import main


def run_cli(*argv):
    return main(list(argv))


# ----------------------------------------------------------------- run basics


def test_run_contraction_writes_summary_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "seq.csv"
    json_path = tmp_path / "summary.json"
    code = run_cli(
        "run", "--model", "contraction", "--param", "lam=0.5", "--steps", "100",
        "--out", str(csv_path), "--json", str(json_path),
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "verdict=Regular" in out
    assert "estimate=-0.5" in out

    payload = json.loads(json_path.read_text())
    assert payload["model"] == "contraction"
    assert payload["estimator"] == "norm"
    assert payload["estimate"] == pytest.approx(-0.5, abs=1e-9)
    assert payload["verdict"] == "Regular"
    assert payload["n_max"] == 100
    assert payload["elapsed_seconds"] == 0.0
    assert set(payload) >= {
        "model", "params", "estimator", "estimate", "stderr", "verdict",
        "warnings", "n_max", "elapsed_seconds", "version",
    }

    raw = csv_path.read_bytes()
    assert b"\r" not in raw  # newline-stable output for byte comparisons
    lines = raw.decode().strip().split("\n")
    assert lines[0] == "n,log_norm,a_n"
    assert len(lines) == 101
    first = lines[1].split(",")
    assert int(first[0]) == 1
    assert float(first[1]) == pytest.approx(-0.5, abs=1e-12)
    assert float(first[2]) == pytest.approx(-0.5, abs=1e-12)
    # every float column round-trips exactly through its printed form
    for row in lines[1:]:
        for col in row.split(",")[1:]:
            assert format(float(col), ".17g") == col


def test_run_quadratic_growth_verdict(capsys):
    code = run_cli(
        "run", "--model", "quadratic", "--state", "diag(1,0.3)", "--direction", "state",
        "--steps", "40",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "verdict=Irregular" in out
    assert f"estimate={math.log(2.0):.9g}" in out


def test_run_collapsing_state_reports_minus_infinity(tmp_path, capsys):
    json_path = tmp_path / "neg.json"
    code = run_cli(
        "run", "--model", "quadratic", "--state", "diag(0.9,0.3)", "--direction", "state",
        "--steps", "40", "--json", str(json_path),
    )
    assert code == 0
    assert "verdict=NegInfinity" in capsys.readouterr().out
    payload = json.loads(json_path.read_text())
    assert payload["estimate"] == "-inf"
    assert payload["stderr"] is None


def test_run_squeezed_parameter_estimator(capsys):
    code = run_cli(
        "run", "--model", "squeezed", "--param", "k=0.4", "--cutoff", "64",
        "--steps", "200",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "estimator=parameter" in out
    value = float(out.split("estimate=")[1].split()[0])
    assert 0.396 <= value <= 0.404


def test_run_exit_codes_for_bad_input(capsys):
    assert run_cli("run", "--model", "not_a_model") == 1
    with pytest.raises(SystemExit) as exc:
        run_cli("run", "--model", "contraction", "--bogus-flag")
    assert exc.value.code == 1


def test_run_require_verdict_flags_short_horizons(capsys):
    code = run_cli(
        "run", "--model", "hartree", "--steps", "5", "--require-verdict",
    )
    assert code == 3
    assert "verdict=Inconclusive" in capsys.readouterr().out


def test_run_exit_two_when_no_usable_points(capsys):
    # the chosen density matrix pairs to zero with every iterate: all points
    # are excluded and the run must fail loudly rather than print a number
    code = run_cli(
        "run", "--model", "contraction", "--param", "lam=0.5",
        "--estimator", "state", "--state", "zero", "--direction", "sigma_x",
        "--functional", "diag(1,0)", "--steps", "50",
    )
    assert code == 2


def test_run_derivation_estimator(capsys):
    code = run_cli(
        "run", "--model", "contraction", "--param", "lam=0.5",
        "--estimator", "derivation", "--state", "sigma_x", "--direction", "sigma_z",
        "--steps", "150",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "estimator=derivation" in out
    value = float(out.split("estimate=")[1].split()[0])
    assert value == pytest.approx(-0.5, abs=1e-9)


def test_run_rejects_coupling_on_models_without_one(capsys):
    # --coupling is a mean-field construction knob; silently dropping it on
    # other models would let a derivation run use the wrong generator
    code = run_cli(
        "run", "--model", "two_level", "--cutoff", "8", "--coupling", "sigma_z",
        "--estimator", "derivation", "--direction", "sigma_z", "--steps", "50",
    )
    assert code == 1
    assert "coupling" in capsys.readouterr().err


# -------------------------------------------------------------------- sweep


def test_sweep_matches_single_runs(tmp_path, capsys):
    out_csv = tmp_path / "grid.csv"
    code = run_cli(
        "sweep", "--model", "contraction", "--grid", "lam=0.25:1.0:4",
        "--steps", "60", "--out", str(out_csv),
    )
    assert code == 0
    lines = out_csv.read_text().strip().split("\n")
    assert lines[0] == "lam,estimate,stderr,verdict,note"
    assert len(lines) == 5
    for row in lines[1:]:
        lam, est = row.split(",")[0:2]
        assert float(est) == pytest.approx(-float(lam), abs=1e-9)
        assert row.split(",")[3] == "Regular"


def test_sweep_records_per_point_failures(tmp_path):
    out_csv = tmp_path / "grid.csv"
    code = run_cli(
        "sweep", "--model", "contraction", "--grid", "lam=-0.5:0.5:2",
        "--steps", "60", "--out", str(out_csv),
    )
    assert code == 0  # a failing cell never aborts the sweep
    lines = out_csv.read_text().strip().split("\n")
    assert len(lines) == 3
    bad = lines[1]
    assert bad.split(",")[3] == "Failed"
    assert "lam" in bad or "negative" in bad or bad.split(",")[4] != ""
    good = lines[2]
    assert float(good.split(",")[1]) == pytest.approx(-0.5, abs=1e-9)


def test_sweep_two_axis_grid_is_row_major(tmp_path):
    out_csv = tmp_path / "grid2.csv"
    code = run_cli(
        "sweep", "--model", "contraction",
        "--grid", "lam=0.5:1.0:2", "--grid", "dim=2:3:2",
        "--steps", "40", "--out", str(out_csv),
    )
    assert code == 0
    lines = out_csv.read_text().strip().split("\n")
    assert lines[0] == "lam,dim,estimate,stderr,verdict,note"
    firsts = [tuple(float(v) for v in row.split(",")[:2]) for row in lines[1:]]
    assert firsts == [(0.5, 2.0), (0.5, 3.0), (1.0, 2.0), (1.0, 3.0)]


# -------------------------------------------------------------------- check


def test_check_reports_growth_bounds(tmp_path, capsys):
    json_path = tmp_path / "check.json"
    code = run_cli(
        "check", "--model", "contraction", "--param", "lam=0.5",
        "--state", "identity", "--direction", "identity", "--json", str(json_path),
    )
    assert code == 0
    payload = json.loads(json_path.read_text())
    assert payload["c1_applicable"] is True
    assert payload["c1_bound"] == pytest.approx(0.0, abs=1e-300)
    assert payload["c2"] == pytest.approx(math.exp(-0.5), rel=1e-9)
    assert payload["variability_C"] == pytest.approx(math.exp(-0.5), rel=1e-6)
    assert payload["variability_holds"] is False
    assert payload["theta_holds"] is True


def test_check_quadratic_variability_holds(capsys):
    code = run_cli(
        "check", "--model", "quadratic", "--state", "diag(1,0.3)", "--direction", "state",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "variability_holds=True" in out or '"variability_holds": true' in out


# -------------------------------------------------------------- koopman demo


def test_koopman_demo_uniform_grid(capsys):
    code = run_cli("koopman-demo", "--points", "16")
    assert code == 0
    out = capsys.readouterr().out
    assert "max discrepancy" in out


def test_koopman_demo_explicit_points_and_json(tmp_path):
    json_path = tmp_path / "demo.json"
    code = run_cli(
        "koopman-demo", "--point-values", "0.1,0.4,0.9", "--r", "3.5",
        "--json", str(json_path),
    )
    assert code == 0
    payload = json.loads(json_path.read_text())
    assert payload["max_discrepancy"] <= 1e-12
    assert payload["points"] == [0.1, 0.4, 0.9]


def test_koopman_demo_rejects_bad_points():
    assert run_cli("koopman-demo", "--point-values", "0.1,0.1") == 1
    assert run_cli("koopman-demo", "--points", "0") == 1


def test_koopman_demo_unkicked_logistic_parameter():
    # r = 0 freezes the dual action; the identity degenerates but must not crash
    assert run_cli("koopman-demo", "--points", "8", "--r", "0.0") == 0


# --------------------------------------------------------------- cp-analyze


def write_map_config(tmp_path, name="map.json"):
    cfg = {
        "map": {
            "dim": 2,
            "terms": [
                {"coeff": [1.0, 0.0], "word": "a"},
                {"coeff": [1.0, 0.0], "word": "a* a"},
                {"coeff": [0.5, 0.0], "word": "a a"},
            ],
        },
        "max_degree": 3,
    }
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_cp_analyze_reports_components(tmp_path, capsys):
    cfg = write_map_config(tmp_path)
    json_path = tmp_path / "report.json"
    code = run_cli("cp-analyze", "--config", str(cfg), "--json", str(json_path))
    assert code == 0
    payload = json.loads(json_path.read_text())
    degrees = {(c["m"], c["n"]) for c in payload["components"]}
    assert degrees == {(1, 0), (1, 1), (2, 0)}
    assert payload["residual"] < 1e-8
    assert all(c["mean_norm"] > 0.0 for c in payload["components"])


def test_cp_analyze_flags_linear_maps(tmp_path):
    cfg = {"map": {"dim": 2, "terms": [{"coeff": [1.0, 0.0], "word": "a"}]}}
    path = tmp_path / "linear.json"
    path.write_text(json.dumps(cfg))
    json_path = tmp_path / "linrep.json"
    code = run_cli("cp-analyze", "--config", str(path), "--json", str(json_path))
    assert code == 0
    payload = json.loads(json_path.read_text())
    assert payload["is_completely_positive"] is True
    assert min(payload["choi_eigenvalues"]) >= -1e-10


def test_cp_analyze_degree_overflow_exits_two(tmp_path):
    cfg = {
        "map": {"dim": 2, "terms": [{"coeff": [1.0, 0.0], "word": "a a a a"}]},
        "max_degree": 3,
    }
    path = tmp_path / "deep.json"
    path.write_text(json.dumps(cfg))
    assert run_cli("cp-analyze", "--config", str(path)) == 2


def test_cp_analyze_requires_a_map(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({}))
    assert run_cli("cp-analyze", "--config", str(path)) == 1


# ------------------------------------------------------------ configuration


def test_config_file_supplies_defaults_and_flags_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "model": "contraction",
        "params": {"lam": 0.25},
        "steps": 80,
        "method": "trend",
    }))
    code = run_cli("run", "--config", str(cfg))
    assert code == 0
    assert "estimate=-0.25" in capsys.readouterr().out
    # a flag wins over the file value
    code = run_cli("run", "--config", str(cfg), "--param", "lam=1.0")
    assert code == 0
    assert "estimate=-1" in capsys.readouterr().out


def test_config_round_trip_is_stable(tmp_path):
    cfg = {"model": "contraction", "params": {"lam": 0.5}, "steps": 60}
    assert json.loads(json.dumps(cfg)) == cfg


# -------------------------------------------------------------- determinism


def run_and_collect(tmp_path, tag):
    csv_path = tmp_path / f"{tag}.csv"
    json_path = tmp_path / f"{tag}.json"
    svg_path = tmp_path / f"{tag}.svg"
    code = run_cli(
        "run", "--model", "squeezed", "--param", "k=0.4", "--cutoff", "32",
        "--steps", "120", "--out", str(csv_path), "--json", str(json_path),
        "--svg", str(svg_path),
    )
    assert code == 0
    return csv_path.read_bytes(), json_path.read_bytes(), svg_path.read_bytes()


def test_repeat_runs_are_byte_identical(tmp_path):
    first = run_and_collect(tmp_path, "one")
    second = run_and_collect(tmp_path, "two")
    assert first == second


def test_repeat_sweeps_are_byte_identical(tmp_path):
    paths = []
    for tag in ("a", "b"):
        out_csv = tmp_path / f"{tag}.csv"
        code = run_cli(
            "sweep", "--model", "contraction", "--grid", "lam=0.2:1.0:3",
            "--steps", "50", "--out", str(out_csv),
        )
        assert code == 0
        paths.append(out_csv.read_bytes())
    assert paths[0] == paths[1]


# ----------------------------------------------------------- console script


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "qlyap.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "qlyap" in proc.stdout
