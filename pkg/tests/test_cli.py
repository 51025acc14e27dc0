import json
import subprocess
import sys

import numpy as np
import pytest

from swseq import fileio
from swseq.cli import main

SCENARIO = {"paths": [dict(tau_ns=601.1, phi_t_deg=11.5, phi_r_deg=59.6, nu_hz=4032.3)],
            "snr_db": [10.0], "n_trials": 2, "schedules": ["uniform", "random"]}


@pytest.fixture
def conf(tmp_path):
    def make(**extra):
        d = {"anneal": {"k_max": 30}, "cost": {"n_phi": 16, "n_nu": 33}, "scenario": SCENARIO}
        d.update(extra)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(d))
        return path
    return make


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


def test_design_outputs_and_determinism(tmp_path, conf, capsys):
    cfg = conf()
    code, out, _ = run(capsys, "design", "--config", cfg, "--out", tmp_path / "a")
    assert code == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["final_f_p"] <= summary["initial_f_p"]
    assert {"nsl_db", "nsl_doppler_db", "runtime_s"} <= summary.keys()
    for name in ("schedule.csv", "trace.csv", "trace.png", "ambiguity.png"):
        assert (tmp_path / "a" / name).stat().st_size > 0
    run(capsys, "design", "--config", cfg, "--out", tmp_path / "b", "--no-plots")
    assert (tmp_path / "a" / "schedule.csv").read_bytes() == (tmp_path / "b" / "schedule.csv").read_bytes()
    assert not (tmp_path / "b" / "trace.png").exists()


def test_design_single_tx_refused(tmp_path, conf, capsys):
    cfg = conf(sounder={"M_T": 1}, tx_array={"kind": "ula", "num_elements": 1})
    code, _, err = run(capsys, "design", "--config", cfg, "--out", tmp_path)
    assert code == 3
    assert json.loads(err)["error"] == "FeasibilityError"


def test_evaluate_uniform_alias(tmp_path, conf, capsys):
    # 129 Doppler points put every k / T0 exactly on the grid
    cfg = conf(cost={"n_phi": 72, "n_nu": 129})
    code, _, _ = run(capsys, "evaluate", "--config", cfg, "--out", tmp_path, "--schedule",
                     "uniform", "--no-plots")
    assert code == 0
    grid = fileio.read_grid_binary(tmp_path / "grid.bin")
    for k in range(1, 5):
        i = int(np.argmin(np.abs(grid.dnu - k / 620e-6)))
        assert abs(grid.dnu[i] * 620e-6 - k) < 1e-12
        # even k: the alias partner angle (sin step k/4) lies on the 5 degree grid
        tol = 1e-6 if k % 2 == 0 else 1e-4
        assert grid.values[:, :, i].max() == pytest.approx(1.0, abs=tol)
    csv_grid = fileio.read_grid_csv(tmp_path / "grid.csv")
    np.testing.assert_array_equal(csv_grid.values, grid.values)
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["nsl_doppler_db"] == pytest.approx(0.0, abs=1e-6)


def test_evaluate_bad_schedules(tmp_path, conf, capsys):
    cfg = conf()
    (tmp_path / "empty.csv").write_text("")
    assert run(capsys, "evaluate", "--config", cfg, "--out", tmp_path, "--schedule",
               tmp_path / "empty.csv")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(",".join(["1"] * 4) for _ in range(8)))
    code, _, err = run(capsys, "evaluate", "--config", cfg, "--out", tmp_path, "--schedule", bad)
    assert code == 3 and "column 1" in json.loads(err)["message"]
    assert run(capsys, "evaluate", "--config", cfg, "--out", tmp_path)[0] == 2


def test_spectrum_reproducible(tmp_path, conf, capsys):
    cfg = conf()
    for d in ("a", "b"):
        assert run(capsys, "spectrum", "--config", cfg, "--out", tmp_path / d, "--schedule",
                   "dense", "--seed", 4, "--no-plots")[0] == 0
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "spectrum.csv").read_bytes()
    sp = fileio.read_spectrum_csv(tmp_path / "a" / "spectrum.csv")
    assert sp["power_db"].max() <= 1e-9


def test_missing_scenario(tmp_path, conf, capsys):
    cfg = conf(scenario=None)
    for cmd in ("montecarlo", "crlb", "spectrum", "simulate"):
        code, _, err = run(capsys, cmd, "--config", cfg, "--out", tmp_path)
        assert code == 2 and json.loads(err)["error"] == "ConfigurationError"


def test_montecarlo_and_crlb(tmp_path, conf, capsys):
    cfg = conf()
    assert run(capsys, "montecarlo", "--config", cfg, "--out", tmp_path)[0] == 0
    rows = fileio.read_rmse_csv(tmp_path / "rmse.csv")
    assert len(rows) == 8 and {r["snr_db"] for r in rows} == {10.0}
    assert (tmp_path / "rmse.png").exists()
    assert run(capsys, "crlb", "--config", cfg, "--out", tmp_path)[0] == 0
    text = (tmp_path / "crlb.csv").read_text().splitlines()
    assert text[0] == "schedule_label,snr_db,parameter,sqrt_crlb" and len(text) == 9


def test_simulate_dump(tmp_path, conf, capsys):
    assert run(capsys, "simulate", "--config", conf(), "--out", tmp_path, "--seed", 1)[0] == 0
    y, sigma2, dims = fileio.read_observation(tmp_path / "observation.bin")
    assert dims == (129, 8, 8, 4) and y.size == 33024 and sigma2 > 0


def test_bad_config_file(tmp_path, capsys):
    (tmp_path / "x.json").write_text("{")
    assert run(capsys, "design", "--config", tmp_path / "x.json")[0] == 2


def test_console_entry_point(tmp_path, conf):
    proc = subprocess.run([sys.executable, "-m", "swseq", "crlb", "--config", str(conf()),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["rows"] == 8
