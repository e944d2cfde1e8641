import csv
import json
from pathlib import Path

import pytest
import yaml

from crossride.cli import main
from crossride.config import KNOWN_KEYS, build_config, load_config
from crossride.errors import ConfigError

TABLE_KEYS = {"horizon", "epsilon", "step", "tau", "gamma", "beta", "o", "mu", "alpha_d", "alpha_t",
              "speed_mph", "psi", "shares", "mechanism", "scenario", "replications", "seed"}


@pytest.fixture
def setup(tmp_path):
    cfg = {"horizon": 30, "scenario": "all", "replications": 2, "seed": 3, "grid_rows": 8,
           "grid_jitter": 0.3, "grid_seed": 1, "trips_file": "trips.csv"}
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(cfg))
    assert main(["gen-demand", "--config", str(tmp_path / "config.yaml"), "--n", "80",
                 "--out", str(tmp_path / "trips.csv"), "--seed", "4"]) == 0
    return tmp_path


def test_all_table_keys_representable():
    assert TABLE_KEYS <= KNOWN_KEYS
    rc = build_config({"beta": 0.2, "tau": 15, "gamma": 0.4, "speed_mph": 30, "shares": [0.5, 0.5],
                       "mechanism": "market", "epsilon": 4, "step": 2, "o": 0.4, "mu": 3})
    s = rc.sim
    assert (s.pricing.discount, s.window.max_wait, s.window.max_detour) == (0.2, 15.0, 0.4)
    assert s.pricing.mean_speed == 0.5 and s.market_shares.weights == (0.5, 0.5)
    assert rc.snapshot()["speed_mph"] == pytest.approx(30)


@pytest.mark.parametrize("raw", [{"bogus": 1}, {"beta": "high"}, {"mechanism": "auction"},
                                 {"replications": 1.5}, {"shares": 0.5}, {"grid_rows": 5, "nodes_file": "x"}])
def test_bad_config(raw):
    with pytest.raises(ConfigError):
        build_config(raw)


def test_empty_config_file(tmp_path):
    (tmp_path / "c.yaml").write_text("")
    assert load_config(tmp_path / "c.yaml").sim.horizon == 1440


def test_unknown_key_exit_code(tmp_path, setup, capsys):
    (tmp_path / "bad.yaml").write_text("horizon: 30\nlambda: 3\n")
    assert main(["simulate", "--config", str(tmp_path / "bad.yaml"), "--trips", str(setup / "trips.csv"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "lambda" in capsys.readouterr().err


def test_simulate_writes_outputs(setup):
    out = setup / "run"
    assert main(["simulate", "--config", str(setup / "config.yaml"), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"manifest.json", "riders.csv", "windows.csv", "metrics.csv"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 3 and manifest["seeds"] == [[3, 0], [3, 1]]
    assert len(manifest["inputs"]["trips_file"]["sha256"]) == 64
    with open(out / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10 and {r["scenario"] for r in rows} >= {"competition", "full"}
    with open(out / "riders.csv") as fh:
        assert sum(1 for _ in fh) == 1 + 80 * 10


def test_simulate_is_byte_identical(setup):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(setup / "config.yaml"), "--out", str(setup / name)]) == 0
    assert (setup / "a" / "riders.csv").read_bytes() == (setup / "b" / "riders.csv").read_bytes()


def test_scenario_override(setup):
    out = setup / "one"
    assert main(["simulate", "--config", str(setup / "config.yaml"), "--out", str(out),
                 "--scenario", "profit-aware", "--mechanism", "equal", "--replications", "1"]) == 0
    with open(out / "metrics.csv") as fh:
        assert [r["scenario"] for r in csv.DictReader(fh)] == ["profit-aware-equal"]


def test_parallel_jobs_match_serial(setup):
    for name, jobs in (("s", "1"), ("p", "2")):
        assert main(["simulate", "--config", str(setup / "config.yaml"), "--out", str(setup / name),
                     "--jobs", jobs]) == 0
    assert (setup / "s" / "riders.csv").read_bytes() == (setup / "p" / "riders.csv").read_bytes()


def test_missing_trips_names_path(setup, capsys):
    assert main(["simulate", "--config", str(setup / "config.yaml"), "--trips", "/no/such/trips.csv",
                 "--out", str(setup / "x")]) == 2
    assert "/no/such/trips.csv" in capsys.readouterr().err


def test_gen_demand_reproducible(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["gen-demand", "--n", "400", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    text = (tmp_path / "a.csv").read_text()
    assert text == (tmp_path / "b.csv").read_text() and len(text.splitlines()) == 401
    assert main(["gen-demand", "--n", "0", "--out", str(tmp_path / "z.csv")]) == 0
    assert (tmp_path / "z.csv").read_text().count("\n") == 1
    assert main(["gen-demand", "--n", "5", "--spatial", "ring", "--out", str(tmp_path / "r.csv")]) == 2


def test_oracle_check(capsys):
    assert main(["oracle-check", "--cases", "60"]) == 0
    assert main(["oracle-check", "--cases", "300", "--greedy"]) == 1
    assert "discrepancy" in capsys.readouterr().out
    assert main(["oracle-check", "--cases", "0"]) == 0
    assert "warning" in capsys.readouterr().err
    assert main(["oracle-check", "--max-nodes", "17"]) == 2


def test_sweep_rows(setup):
    out = setup / "sweep"
    assert main(["sweep", "--config", str(setup / "config.yaml"), "--out", str(out), "--replications", "5",
                 "--param", "beta=0,0.1,0.2,0.3"]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    share = [r for r in rows if r["metric"] == "share_rate"]
    assert len(share) == 60
    assert {r["scenario"] for r in share} == {"competition", "full", "profit-aware-shapley"}


@pytest.mark.parametrize("param", ["lambda=1,2", "beta="])
def test_sweep_rejects_bad_spec(setup, param):
    assert main(["sweep", "--config", str(setup / "config.yaml"), "--out", str(setup / "s"),
                 "--param", param]) == 2


def test_analyze(setup):
    run = setup / "run"
    assert main(["simulate", "--config", str(setup / "config.yaml"), "--out", str(run)]) == 0
    assert main(["analyze", str(run)]) == 0
    assert (run / "fits.csv").exists() and (run / "report.txt").exists()


def test_analyze_single_window_warns(tmp_path, capsys):
    (tmp_path / "windows.csv").write_text(
        "scenario,replication,t,arrivals,active,vertices,edges,avg_degree,matched_pairs,matching_weight,"
        "pair_profit,creation_s,matching_s\nfull,0,5.0,3,3,3,1,0.67,1,10.0,10.0,0.001,0.001\n")
    assert main(["analyze", str(tmp_path)]) == 0
    assert "warning" in capsys.readouterr().err
    assert "warning" in (tmp_path / "report.txt").read_text()


def test_analyze_corrupt_csv(tmp_path, capsys):
    (tmp_path / "windows.csv").write_text(
        "scenario,replication,t,arrivals,active,vertices,edges,avg_degree,matched_pairs,matching_weight,"
        "pair_profit,creation_s,matching_s\nfull,0,5.0,3,3,3,1,0.67,1,10.0,10.0,0.001,0.001\n"
        "full,0,10.0,three,3,3,1,0.67,1,10.0,10.0,0.001,0.001\n")
    assert main(["analyze", str(tmp_path)]) == 2
    assert "windows.csv:3" in capsys.readouterr().err


def test_analyze_missing_dir(tmp_path):
    assert main(["analyze", str(tmp_path / "none")]) == 2


def test_bench_small(tmp_path):
    assert main(["bench", "--out", str(tmp_path), "--levels", "5,10,20", "--horizon", "20",
                 "--ramp-replications", "1"]) == 0
    report = (tmp_path / "report.txt").read_text()
    assert "degree reaches 1" in report and Path(tmp_path / "fits.csv").exists()
