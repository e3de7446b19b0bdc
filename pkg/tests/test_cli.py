import csv
import json

import pytest

from ttpoe.main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main

TINY_WORLD = {
    "id": "tiny",
    "kind": "free",
    "dims": 2,
    "x_max": 1.25,
    "min_start_goal_distance": 0.5,
    "success": {"max_steps": 30, "max_cost": 1e30},
    "learn": {"state_nodes": 11, "action_nodes": 5, "max_rank": 50, "eps": 1e-10},
    "controller": {"H": 5, "covariance": 0.125, "beta": 0.05},
}


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    world = tmp_path / "tiny.json"
    world.write_text(json.dumps(TINY_WORLD))
    return tmp_path


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_build_run_report(workspace, capsys):
    model = workspace / "models" / "tiny.tt"
    assert main(["build-model", "--world", "tiny.json", "--model", str(model), "--text"]) == EXIT_OK
    assert model.exists() and model.with_suffix(".json").exists() and model.with_suffix(".txt").exists()

    code = main([
        "run", "--world", "tiny.json", "--method", "mppi,tt_poe_mppi", "--samples", "8",
        "--trials", "2", "--seed", "1", "--out", "out", "--model", str(model),
    ])
    assert code == EXIT_OK
    rows = _rows(workspace / "out" / "trials.csv")
    assert [(r["method"], r["trial"]) for r in rows] == [
        ("mppi", "0"), ("mppi", "1"), ("tt_poe_mppi", "0"), ("tt_poe_mppi", "1"),
    ]
    assert "TT-PoE-MPPI" in capsys.readouterr().out

    (workspace / "out" / "summary.csv").unlink()
    assert main(["report", "--out", "out"]) == EXIT_OK
    assert len(_rows(workspace / "out" / "summary.csv")) == 2


def test_config_file_with_flag_overrides(workspace):
    config = workspace / "experiment.json"
    config.write_text(json.dumps({
        "world": "tiny.json",
        "methods": ["mppi"],
        "samples": [4, 8],
        "trials": 5,
        "out": "from_config",
    }))
    assert main(["run", "--config", str(config), "--trials", "1"]) == EXIT_OK
    rows = _rows(workspace / "from_config" / "trials.csv")
    assert [r["samples"] for r in rows] == ["4", "8"]


def test_usage_errors(workspace):
    with pytest.raises(SystemExit) as info:
        main(["run", "--world", "tiny.json", "--method", "bogus"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["--log-level", "LOUD", "report", "--out", "x"])
    assert info.value.code == EXIT_USAGE
    assert main(["run", "--method", "mppi"]) == EXIT_USAGE
    assert main(["run", "--world", "tiny.json", "--trials", "0"]) == EXIT_USAGE


def test_runtime_errors(workspace):
    assert main(["run", "--world", "atlantis", "--method", "mppi", "--trials", "1"]) == EXIT_RUNTIME
    assert main(["run", "--world", "tiny.json", "--method", "tt_poe_mppi", "--trials", "1"]) == EXIT_RUNTIME
    assert main(["report", "--out", "nowhere"]) == EXIT_RUNTIME
    (workspace / "bad.json").write_text("{")
    assert main(["run", "--config", "bad.json"]) == EXIT_RUNTIME
