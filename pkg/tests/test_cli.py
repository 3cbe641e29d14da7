import json

import numpy as np
import pytest

import petgov
from petgov import cli
from petgov.governor import GammaDOracleResult
from petgov.harness import TrajectoryLog


def write_config(tmp_path, name="scenario.json", **overrides):
    with open(petgov.paper_scenario_path()) as f:
        raw = json.load(f)
    raw.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["--version"])
    assert excinfo.value.code == 0
    out = capsys.readouterr().out
    assert petgov.__version__ in out
    assert "Philox" in out


def test_simulate_short_horizon(tmp_path, capsys):
    config = write_config(tmp_path, t_final=2.0)
    out_csv = tmp_path / "run.csv"
    code = cli.main(["simulate", "--config", str(config), "--out", str(out_csv)])
    assert code == 0
    log = TrajectoryLog.from_csv(out_csv)
    assert log.n_rows == 2001
    assert (tmp_path / "run.csv.meta.json").exists()
    report_text = (tmp_path / "run.report.txt").read_text()
    assert "[report]" in report_text and "[effective_config]" in report_text
    meta = json.loads((tmp_path / "run.csv.meta.json").read_text())
    assert meta["effective_config"]["t_final"] == 2.0
    assert "max |tau|" in capsys.readouterr().out


def test_simulate_bundled_scenario_full(tmp_path):
    out_csv = tmp_path / "nominal.csv"
    code = cli.main([
        "simulate", "--config", str(petgov.paper_scenario_path()),
        "--out", str(out_csv),
    ])
    assert code == 0
    cfg = petgov.load_paper_scenario()
    n_lines = sum(1 for _ in open(out_csv))
    assert n_lines == cfg.n_steps + 1 + 1  # header + rows


def test_simulate_rejects_misaligned_sampling(tmp_path, capsys):
    config = write_config(tmp_path, T_s=0.0007)
    code = cli.main(["simulate", "--config", str(config)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_simulate_missing_config(tmp_path, capsys):
    code = cli.main(["simulate", "--config", str(tmp_path / "nope.json")])
    assert code == 2


def test_simulate_zero_horizon(tmp_path):
    config = write_config(tmp_path)
    out_csv = tmp_path / "zero.csv"
    code = cli.main([
        "simulate", "--config", str(config), "--t-final", "0", "--out", str(out_csv),
    ])
    assert code == 0
    log = TrajectoryLog.from_csv(out_csv)
    assert log.n_rows == 1


def test_simulate_flags_violations_with_exit_1(tmp_path, capsys):
    # start far outside the invariant set: forward invariance fails and the
    # monitor reports it (a warning is emitted for the inadmissible start)
    config = write_config(tmp_path, omega0=[2.0, 2.0, 2.0], t_final=1.0)
    out_csv = tmp_path / "bad.csv"
    with pytest.warns(RuntimeWarning):
        code = cli.main(["simulate", "--config", str(config), "--out", str(out_csv)])
    assert code == 1
    assert "VIOLATION" in capsys.readouterr().out


def test_simulate_runtime_abort_exit_3(tmp_path, capsys):
    config = write_config(tmp_path, t_final=5.0, delta=-0.55, zeta=-0.54)
    code = cli.main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv")])
    assert code == 3
    assert "runtime abort" in capsys.readouterr().err


def test_gamma_d_command_and_cache(tmp_path, capsys):
    config = write_config(tmp_path)
    cache = tmp_path / "gamma_d_cache.txt"
    code = cli.main(["gamma-d", "--config", str(config), "--out", str(cache)])
    assert code == 0
    out = capsys.readouterr().out
    assert "bisection" in out
    value = float(out.split("gamma_d = ")[1].split()[0])
    assert 0.4 < value < 0.7
    assert cache.exists()
    # second invocation is served from the cache with the identical value
    code = cli.main(["gamma-d", "--config", str(config), "--out", str(cache)])
    assert code == 0
    out2 = capsys.readouterr().out
    assert "cache" in out2
    assert f"{value:.9f}" in out2


def test_gamma_d_closed_form_special_case(tmp_path, capsys):
    config = write_config(tmp_path, k_d=1e-300)
    code = cli.main([
        "gamma-d", "--config", str(config), "--out", str(tmp_path / "c.txt"),
    ])
    assert code == 0
    out = capsys.readouterr().out
    value = float(out.split("gamma_d = ")[1].split()[0])
    closed_form = 5.0 * (1.0 - np.sqrt(1.0 - (2.5 / 5.0) ** 2))
    assert value == pytest.approx(closed_form, abs=2e-6)


def test_gamma_d_oracle_failure_exit_4(tmp_path, capsys, monkeypatch):
    # wiring check for the solver-bug sentinel: fake an unsound oracle
    config = write_config(tmp_path)

    def fake_cached(*args, **kwargs):
        return 0.5, GammaDOracleResult(0.5, 10, 99.0, 2.5), False

    monkeypatch.setattr(cli, "gamma_d_cached", fake_cached)
    code = cli.main(["gamma-d", "--config", str(config), "--out", str(tmp_path / "c.txt")])
    assert code == 4
    assert "unsound" in capsys.readouterr().err


def test_check_geodesic_nominal_infeasible(tmp_path, capsys):
    config = write_config(tmp_path)
    code = cli.main(["check-geodesic", "--config", str(config)])
    assert code == 0  # informational regardless of the verdict
    out = capsys.readouterr().out
    assert "infeasible" in out
    margin = float(out.split("min pointing margin = ")[1].split()[0])
    assert margin < 0.0


def test_check_geodesic_feasible_when_goal_is_start(tmp_path, capsys):
    config = write_config(tmp_path, Rd_axis_angle=[1.0, 0.0, 0.0, 0.0])
    code = cli.main(["check-geodesic", "--config", str(config)])
    assert code == 0
    assert "is feasible" in capsys.readouterr().out


def test_check_geodesic_resolution_refines(tmp_path, capsys):
    config = write_config(tmp_path)
    margins = []
    for n in (2, 1000):
        cli.main(["check-geodesic", "--config", str(config), "--samples", str(n)])
        out = capsys.readouterr().out
        margins.append(float(out.split("min pointing margin = ")[1].split()[0]))
    assert margins[1] <= margins[0]


def test_check_geodesic_bad_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    code = cli.main(["check-geodesic", "--config", str(bad)])
    assert code == 2


def test_sweep_requires_seed(tmp_path, capsys):
    config = write_config(tmp_path, t_final=1.0)
    code = cli.main(["sweep", "--config", str(config), "--n", "2"])
    assert code == 2
    assert "--seed" in capsys.readouterr().err


def test_sweep_zero_perturbation_matches_simulate(tmp_path, capsys):
    config = write_config(tmp_path, t_final=1.0)
    out_csv = tmp_path / "sweep.csv"
    code = cli.main([
        "sweep", "--config", str(config), "--n", "1", "--seed", "5",
        "--rot-sigma", "0", "--omega-sigma", "0", "--out", str(out_csv),
    ])
    assert code == 0
    cfg = petgov.load_paper_scenario().replaced(t_final=1.0)
    _, report = petgov.simulate(cfg)
    row = out_csv.read_text().splitlines()[1].split(",")
    assert float(row[1]) == report.max_tau_norm
    assert (tmp_path / "sweep.csv.meta.json").exists()


def test_sweep_deterministic_bytes(tmp_path):
    config = write_config(tmp_path, t_final=1.0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        code = cli.main([
            "sweep", "--config", str(config), "--n", "3", "--seed", "11",
            "--out", str(out),
        ])
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_exit_5_on_violations(tmp_path, capsys):
    # inadmissible start violates forward invariance in every run
    config = write_config(tmp_path, omega0=[2.0, 2.0, 2.0], t_final=1.0)
    with pytest.warns(RuntimeWarning):
        code = cli.main([
            "sweep", "--config", str(config), "--n", "2", "--seed", "3",
            "--rot-sigma", "0", "--omega-sigma", "0",
            "--out", str(tmp_path / "s.csv"),
        ])
    assert code == 5
    assert "violating run indices" in capsys.readouterr().err
