import csv
import json
import subprocess
import sys

import pytest

from prosumage.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, run_cli

CFG = """\
scenario_id = cli
dataset = toy
setup = NoBEVs
horizon_hours = 48
tariff_kind = Fixed
tariff_variant = InvariantAdder
adder_eur_per_mwh = 200
feed_in_tariff_eur_per_mwh = 20
seed = 1
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "toy.cfg"
    path.write_text(CFG)
    return path


def _run(cfg, out, *args):
    return run_cli([args[0], "--config", str(cfg), "--out", str(out), *args[1:]])


def test_full_pipeline(cfg, tmp_path):
    out = tmp_path / "out"
    assert _run(cfg, out, "build", "--omega", "0.5") == EXIT_OK
    assert (out / "cli.mps").read_text().startswith("NAME")

    assert _run(cfg, out, "solve") == EXIT_OK
    ref = json.loads((out / "solve.json").read_text())
    assert ref["omega"] is None and "prosumer" not in ref

    assert _run(cfg, out, "sweep", "--grid", "0:1:0.5", "--no-refine") == EXIT_OK
    rows = list(csv.DictReader(open(out / "omega_curve.csv")))
    assert [float(r["omega"]) for r in rows] == [0.0, 0.5, 1.0]
    rec = json.loads((out / "sweep.json").read_text())
    assert rec["omega_star"] in (0.0, 0.5, 1.0) and rec["extra"]["z_monotone"]

    assert _run(cfg, out, "prosumer") == EXIT_OK
    assert json.loads((out / "prosumer.json").read_text())["omega_star"] == rec["omega_star"]

    assert _run(cfg, out, "check") == EXIT_OK
    dev = json.loads((out / "deviation.json").read_text())
    assert {"d_omega", "exceeds", "rtp100_flag"} <= set(dev)
    assert (out / "duration_rooftop_to_load_cosorted.csv").exists()

    assert _run(cfg, out, "tariff", "--prices", str(out / "prices_at_omega_star.csv")) == EXIT_OK
    assert len(list(csv.DictReader(open(out / "tariff.csv")))) == 48


def test_solve_with_omega_reports_household(cfg, tmp_path):
    assert _run(cfg, tmp_path, "solve", "--omega", "0.4") == EXIT_OK
    out = json.loads((tmp_path / "solve.json").read_text())
    assert out["prosumer"]["realized_rate"] >= 0.4 - 1e-6


def test_check_without_sweep_is_config_error(cfg, tmp_path):
    assert _run(cfg, tmp_path, "check") == EXIT_CONFIG
    assert _run(cfg, tmp_path, "prosumer") == EXIT_CONFIG


def test_stale_sweep_is_rejected(cfg, tmp_path):
    assert _run(cfg, tmp_path, "sweep", "--grid", "0:0:0.1") == EXIT_OK
    assert _run(cfg, tmp_path, "check", "--seed", "2") == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert run_cli(["solve", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert run_cli(["solve", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_values(cfg, tmp_path):
    cfg.write_text(CFG.replace("InvariantAdder", "invariant"))
    assert _run(cfg, tmp_path, "solve") == EXIT_CONFIG
    cfg.write_text(CFG)
    assert _run(cfg, tmp_path, "sweep", "--grid", "1:0:0.1") == EXIT_CONFIG
    assert _run(cfg, tmp_path, "solve", "--omega", "1.5") == EXIT_CONFIG


def test_solver_failure_exit_code(cfg, tmp_path):
    cfg.write_text(CFG + "rooftop_cap_per_household_kw = 0\n")
    assert _run(cfg, tmp_path, "solve", "--omega", "0.5") == EXIT_SOLVER
    assert _run(cfg, tmp_path, "sweep", "--grid", "0.5:0.6:0.1") == EXIT_SOLVER


def test_oracle_backend_selectable(cfg, tmp_path):
    cfg.write_text(CFG.replace("horizon_hours = 48", "horizon_hours = 24"))
    assert _run(cfg, tmp_path, "solve", "--backend", "oracle") == EXIT_OK


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "prosumage.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "sweep" in r.stdout
