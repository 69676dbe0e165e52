import csv
import json

import pytest

from wwtp_marl.cli import main
from wwtp_marl.plant import FLUX_FIELDS

SMALL = """
[experiment]
seeds = [0]
warmup_days = 1.0
horizon_days = 0.5
bounds_samples = 30
[train]
total_steps = 40
batch_size = 16
buffer_capacity = 32
hidden = [8, 8]
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return str(p)


def files(d):
    return sorted(p.name for p in d.iterdir())


def test_exit_codes(tmp_path, capsys):
    assert main(["bogus"]) == 1
    assert main(["train", "--out", str(tmp_path), "--scenario", "lca-ia", "--nope"]) == 1
    assert main(["train", "--out", str(tmp_path), "--scenario", "baseline"]) == 1
    assert main(["--help"]) == 0
    assert main(["impacts", "assess", "--out", str(tmp_path), str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[train]\nbogus = 1\n")
    assert main(["influent", "export", "--out", str(tmp_path), "--config", str(bad)]) == 1
    assert "usage" in capsys.readouterr().err


def test_help_lists_units(capsys):
    assert main(["plant", "simulate", "--help"]) == 0
    out = capsys.readouterr().out
    for needle in ("g O2/m3", "kg 25% solution per m3", "days"):
        assert needle in out


def test_influent_export(tmp_path):
    assert main(["influent", "export", "--out", str(tmp_path), "--days", "1"]) == 0
    rows = list(csv.reader(open(tmp_path / "influent.csv")))
    assert rows[0] == ["t_days", "Q_m3d", "COD", "TN", "NH3N", "TP"]
    assert len(rows) == 25


def test_simulate_then_assess(tmp_path, small):
    assert main(["plant", "simulate", "--out", str(tmp_path), "--config", small,
                 "--days", "0.25"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "fluxes.csv")))
    assert list(rows[0]) == list(FLUX_FIELDS) and len(rows) == 6
    assert main(["impacts", "assess", "--out", str(tmp_path), str(tmp_path / "fluxes.csv")]) == 0
    doc = json.loads((tmp_path / "impacts.json").read_text())
    assert doc["intervals"] == 6 and doc["per_m3"]["energy"] > 0
    assert files(tmp_path) == ["fluxes.csv", "impacts.csv", "impacts.json", "small.toml"]


def test_assess_all_zero_fluxes(tmp_path):
    src = tmp_path / "zero.csv"
    values = {k: 0.0 for k in FLUX_FIELDS}
    values.update(treated_volume=1.0, eff_volume=1.0)
    with open(src, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FLUX_FIELDS)
        w.writerow([values[k] for k in FLUX_FIELDS])
    out = tmp_path / "out"
    assert main(["impacts", "assess", "--out", str(out), str(src)]) == 0
    per = json.loads((out / "impacts.json").read_text())["per_m3"]
    assert per == {"energy": 0.0, "cost": pytest.approx(0.3, abs=1e-15), "ep": 0.0, "ghg": 0.0}


def test_train_deterministic_then_evaluate(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["train", "--out", str(d), "--config", small, "--scenario", "lca-ia",
                     "--seed", "7"]) == 0
    assert (a / "train_log.csv").read_bytes() == (b / "train_log.csv").read_bytes()
    assert files(a) == ["agents.json", "bounds.json", "train_log.csv"]
    header = (a / "train_log.csv").read_text().splitlines()[0]
    assert header == "step,reward,do,dose,critic_loss_1,critic_loss_2,E,EP,GHG,cost,violation"
    ev = tmp_path / "ev"
    assert main(["evaluate", "--out", str(ev), "--config", small,
                 "--agents", str(a / "agents.json")]) == 0
    doc = json.loads((ev / "evaluation.json").read_text())
    assert doc["scenario"] == "LCA-IA" and doc["intervals"] == 12
    c = tmp_path / "c"
    assert main(["train", "--out", str(c), "--config", small, "--scenario", "cost", "--seed", "7",
                 "--bounds", str(a / "bounds.json"), "--violation-penalty", "0"]) == 0
    assert json.loads((c / "agents.json").read_text())["config"]["violation_penalty"] == 0.0


def test_scenarios_run_and_report(tmp_path, small):
    out = tmp_path / "run"
    assert main(["scenarios", "run", "--all", "--out", str(out), "--config", small]) == 0
    names = files(out)
    for slug in ("lca-ia", "lca-ib", "lca-sw", "cost"):
        assert f"episode_{slug}_seed0.csv" in names and f"train_{slug}_seed0.csv" in names
    for f in ("episode_baseline.csv", "summary.json", "table3_analog.csv", "breakdown.csv",
              "bounds.json"):
        assert f in names
    summary = json.loads((out / "summary.json").read_text())
    assert list(summary) == ["Baseline", "LCA-IA", "LCA-IB", "LCA-SW", "Cost"]
    rep = tmp_path / "rep"
    assert main(["report", "--in", str(out), "--out", str(rep)]) == 0
    assert files(rep) == ["actions.png", "breakdown.png", "indicators.png", "learning_curves.png",
                          "report.csv"]
    assert main(["report", "--in", str(tmp_path), "--out", str(rep)]) == 1
