"""End-to-end command-line flows on a miniature world."""

import json
import subprocess
import sys

import pytest

from longnav.cli import (DEFAULT_INTERVAL_S, RunConfig, load_run_config, main,
                         run_config_from_dict)
from longnav.errors import ConfigError


@pytest.fixture
def config_path(tmp_path):
    doc = {
        "world": {"n_locations": 2, "landmarks_per_location": 50, "seed": 3},
        "strategies": ["score", "static"],
        "traversals": 2,
        "interval_s": 3600.0,
        "offset_amplitude_m": 0.1,
    }
    p = tmp_path / "run.json"
    p.write_text(json.dumps(doc))
    return p


def test_run_config_from_dict():
    cfg = run_config_from_dict({
        "world": {"n_locations": 4, "visibility_mean": [0.6, 0.8]},
        "strategies": ["fremen", {"kind": "score", "m": 100}],
        "mode": "closed",
    })
    assert cfg.world.n_locations == 4
    assert cfg.world.visibility_mean == (0.6, 0.8)
    assert [s.kind for s in cfg.strategies] == ["fremen", "score"]
    assert cfg.strategies[1].m == 100
    assert cfg.strategies[0].image_width == cfg.world.image_width
    assert cfg.mode == "closed"
    assert cfg.interval_s == DEFAULT_INTERVAL_S


def test_run_config_defaults_all_strategies():
    cfg = RunConfig()
    assert len(cfg.strategies) == 8


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        run_config_from_dict({"bananas": 1})
    with pytest.raises(ConfigError):
        run_config_from_dict({"world": {"bananas": 1}})
    with pytest.raises(ConfigError):
        run_config_from_dict({"mode": "sideways"})


def test_load_run_config_bad_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        load_run_config(p)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_generate_is_deterministic(tmp_path, config_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli("generate", "--config", config_path, "--out", out1) == 0
    assert run_cli("generate", "--config", config_path, "--out", out2) == 0
    for name in ("dataset.jsonl", "map.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    assert (out1 / "dataset.jsonl").read_text().count("\n") == 2 + 2 * 2


def test_generate_seed_override_changes_output(tmp_path, config_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    run_cli("generate", "--config", config_path, "--out", out1)
    run_cli("generate", "--config", config_path, "--out", out2, "--seed", 99)
    assert (out1 / "dataset.jsonl").read_bytes() \
        != (out2 / "dataset.jsonl").read_bytes()


def test_replay_round(tmp_path, config_path, capsys):
    data = tmp_path / "data"
    run_cli("generate", "--config", config_path, "--out", data)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        assert run_cli("replay", "--config", config_path, "--out", out,
                       "--strategy", "score",
                       "--dataset", data / "dataset.jsonl") == 0
    assert (out1 / "logs_score.jsonl").read_bytes() \
        == (out2 / "logs_score.jsonl").read_bytes()
    assert "mean_error_px" in capsys.readouterr().out

    out3 = tmp_path / "r3"
    assert run_cli("replay", "--config", config_path, "--out", out3,
                   "--strategy", "score", "--dataset", data / "dataset.jsonl",
                   "--map", data / "map.json") == 0
    assert (out3 / "logs_score.jsonl").exists()


def test_replay_requires_strategy_choice(tmp_path, config_path, capsys):
    data = tmp_path / "data"
    run_cli("generate", "--config", config_path, "--out", data)
    code = run_cli("replay", "--config", config_path, "--out", tmp_path / "r",
                   "--dataset", data / "dataset.jsonl")
    assert code == 1  # config lists two strategies, none picked
    assert "error:" in capsys.readouterr().err


def test_simulate_writes_logs_and_final_map(tmp_path, config_path):
    out = tmp_path / "sim"
    assert run_cli("simulate", "--config", config_path, "--out", out,
                   "--strategy", "latest", "--traversals", 3) == 0
    assert (out / "logs_latest.jsonl").exists()
    assert (out / "map_final.json").exists()


def test_compare_writes_report(tmp_path, config_path, capsys):
    out = tmp_path / "cmp"
    assert run_cli("compare", "--config", config_path, "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["mode"] == "open"
    assert set(summary["ranking"]) == {"score", "static"}
    assert summary["n_frames"] == 2 * 2
    assert len(set(summary["stream_hash"].values())) == 1
    header = (out / "cdf.csv").read_text().splitlines()[0]
    assert header.startswith("threshold_px,")
    assert set(header.split(",")[1:]) == {"score", "static"}
    assert "ranking (best first):" in capsys.readouterr().out


def test_compare_closed_mode_flag(tmp_path, config_path):
    out = tmp_path / "cmpc"
    assert run_cli("compare", "--config", config_path, "--out", out,
                   "--mode", "closed", "--traversals", 2) == 0
    assert json.loads((out / "summary.json").read_text())["mode"] == "closed"


def test_report_from_logs(tmp_path, config_path):
    data = tmp_path / "data"
    run_cli("generate", "--config", config_path, "--out", data)
    r1, r2 = tmp_path / "r1", tmp_path / "r2"
    run_cli("replay", "--config", config_path, "--out", r1,
            "--strategy", "score", "--dataset", data / "dataset.jsonl")
    run_cli("replay", "--config", config_path, "--out", r2,
            "--strategy", "static", "--dataset", data / "dataset.jsonl")
    out = tmp_path / "rep"
    assert run_cli("report", "--config", config_path, "--out", out,
                   "--logs", r1 / "logs_score.jsonl",
                   r2 / "logs_static.jsonl") == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["mean_error_px"]) == {"score", "static"}


def test_error_exit_codes(tmp_path, config_path, capsys):
    assert run_cli("generate", "--config", config_path) == 1  # no --out
    assert "error:" in capsys.readouterr().err

    missing = tmp_path / "nope.jsonl"
    assert run_cli("replay", "--config", config_path, "--out", tmp_path / "o",
                   "--strategy", "score", "--dataset", missing) == 1
    assert "io error:" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text('{"bananas": 1}')
    assert run_cli("generate", "--config", bad, "--out", tmp_path / "o") == 1

    with pytest.raises(SystemExit) as exc:
        run_cli("frobnicate")
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        run_cli("replay", "--strategy", "bogus", "--dataset", "x", "--out", "y")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "longnav.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "generate" in proc.stdout and "compare" in proc.stdout
