import json

import pytest

from mmwave_udn.cli import parse_seed_range, run_experiment
from mmwave_udn.errors import ConfigError

SMALL = "n_small_cells = 4\nn_users = 12\n"


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def test_single_algorithm_layout(tmp_path, small_cfg):
    out = tmp_path / "run1"
    code = run_experiment(["--config", str(small_cfg), "--algo", "gradient", "--out", str(out)])
    assert code in (0, 3)
    for name in ("trace.csv", "load.csv", "ee_cdf.csv", "rate_cdf.csv", "summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 1 and summary["config"]["n_users"] == 12
    assert (code == 3) == summary["gradient"]["qos_infeasible"]


def test_both_has_comparison(tmp_path, small_cfg):
    out = tmp_path / "both"
    run_experiment(["--config", str(small_cfg), "--algo", "both", "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    assert {"gradient", "max_sinr", "comparison"} <= summary.keys()
    assert summary["comparison"]["ee_ratio"] == pytest.approx(
        summary["gradient"]["aggregate_ee_bits_per_joule"]
        / summary["max_sinr"]["aggregate_ee_bits_per_joule"])
    assert (out / "gradient" / "trace.csv").is_file() and (out / "max-sinr" / "load.csv").is_file()


def test_repeat_runs_identical_except_timestamp(tmp_path, small_cfg):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        run_experiment(["--config", str(small_cfg), "--seed", "5", "--out", str(out)])
    for rel in ("gradient/trace.csv", "gradient/load.csv", "max-sinr/ee_cdf.csv",
                "gradient/rate_cdf.csv"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
    a, b = (json.loads((o / "summary.json").read_text()) for o in outs)
    assert a.pop("timestamp") and b.pop("timestamp")
    assert a == b


def test_seed_sweep_merges(tmp_path, small_cfg):
    out = tmp_path / "mc"
    run_experiment(["--config", str(small_cfg), "--seeds", "2..4", "--algo", "max-sinr",
                    "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seeds"] == [2, 3, 4]
    assert set(summary["per_seed"]) == {"2", "3", "4"}
    assert "mean" in summary["merged"]["max_sinr"]["aggregate_ee_bits_per_joule"]
    assert (out / "seed_3" / "load.csv").is_file()


def test_blockage_flag_echoed(tmp_path, small_cfg):
    out = tmp_path / "blk"
    run_experiment(["--config", str(small_cfg), "--blockage", "on", "--algo", "max-sinr",
                    "--out", str(out)])
    assert json.loads((out / "summary.json").read_text())["config"]["blockage"] is True


def test_exit_codes(tmp_path, small_cfg, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_key = 1\n")
    assert run_experiment(["--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert run_experiment(["--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "x")]) == 2
    assert run_experiment(["--seeds", "5..2", "--out", str(tmp_path / "x")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run_experiment(["--config", str(small_cfg), "--out", str(blocker / "sub")]) == 4
    with pytest.raises(SystemExit) as exc:
        run_experiment(["--bogus", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    # the full desk profile cannot meet the QoS target for everyone
    assert run_experiment(["--algo", "gradient", "--out", str(tmp_path / "desk")]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_seed_range_parsing():
    assert parse_seed_range("1..3") == [1, 2, 3]
    with pytest.raises(ConfigError):
        parse_seed_range("3-4")
