import json

import numpy as np
import pytest

from ttpoe.core.exceptions import ConfigurationError
from ttpoe.schemas.controller import Method
from ttpoe.schemas.experiment import ExperimentConfig
from ttpoe.services.controller import controller_config
from ttpoe.services.harness import (
    TrialJob,
    plan_jobs,
    run_experiment,
    run_trial,
    sample_layouts,
    trial_rng,
    trial_seed,
)
from ttpoe.services.model_builder import build_feasibility_model, save_feasibility_model
from ttpoe.worlds import TrialLayout, create_world, load_world_config

FREE_WORLD = {
    "id": "tiny",
    "kind": "free",
    "dims": 2,
    "x_max": 1.25,
    "min_start_goal_distance": 0.5,
    "success": {"max_steps": 40, "max_cost": 1e30},
    "learn": {"state_nodes": 11, "action_nodes": 5, "max_rank": 50, "eps": 1e-10},
    "controller": {"H": 5, "covariance": 0.125, "beta": 0.05},
}

ONLINE_WORLD = {
    **FREE_WORLD,
    "id": "tiny_online",
    "kind": "online",
    "min_start_goal_distance": 0.0,
    "layout": {"count_min": 2, "count_max": 3, "radius_min": 0.1, "radius_max": 0.2},
    "success": {"max_steps": 30, "max_cost": 1e30},
    "learn": {"state_nodes": 21, "action_nodes": 5, "max_rank": 100, "eps": 1e-8},
}


def _write_world(tmp_path, data):
    path = tmp_path / f"{data['id']}.json"
    path.write_text(json.dumps(data))
    return path


def _timeless(results):
    return [r.model_dump(exclude={"step_time", "rebuild_time"}) for r in results]


def test_seeds_are_deterministic_and_distinct():
    assert trial_seed(0, 3) == trial_seed(0, 3)
    assert len({trial_seed(0, t) for t in range(50)}) == 50
    assert trial_seed(0, 1) != trial_seed(1, 1)
    a = trial_rng(5, 2, 1).random(4)
    np.testing.assert_array_equal(a, trial_rng(5, 2, 1).random(4))
    assert not np.array_equal(a, trial_rng(5, 2, 0).random(4))


def test_layouts_are_shared_across_methods(tmp_path):
    config = load_world_config(str(_write_world(tmp_path, FREE_WORLD)))
    cfg = ExperimentConfig(world="tiny", methods=[Method.MPPI, Method.PROJ_MPPI], samples=[8, 16], trials=3, seed=7)
    jobs = plan_jobs(cfg, config)
    assert len(jobs) == 2 * 2 * 3
    by_trial = {}
    for job in jobs:
        by_trial.setdefault(job.trial, []).append(job.layout)
    for layouts in by_trial.values():
        assert all(np.array_equal(layout.start, layouts[0].start) for layout in layouts)
    again = sample_layouts(config, 3, 7)
    np.testing.assert_array_equal(again[1].goal, by_trial[1][0].goal)

    specs = [job.spec for job in jobs if job.trial == 2]
    assert len({s.seed for s in specs}) == 1
    assert {(s.method, s.N) for s in specs} == {(m, n) for m in (Method.MPPI, Method.PROJ_MPPI) for n in (8, 16)}
    assert all(s.world_id == "tiny" and s.start == specs[0].start for s in specs)


def test_run_trial_reaches_goal(make_world_config):
    config = make_world_config(success={"max_steps": 40, "max_cost": 1e30})
    layout = TrialLayout(start=np.array([-0.5, 0.0]), goal=np.array([0.5, 0.0]))
    job = TrialJob(
        world_config=config,
        layout=layout,
        cfg=controller_config(config, Method.MPPI, 64),
        trial=0,
        master_seed=0,
    )
    result = run_trial(job)
    assert result.success
    assert 10 <= result.steps < 40
    assert result.total_cost > 0
    assert result.violation_fraction == 0.0
    assert _timeless([run_trial(job)]) == _timeless([result])


def test_pngrid_straight_line_trial():
    config = load_world_config("pngrid")
    layout = TrialLayout(start=np.array([-0.6, 0.0]), goal=np.array([0.6, 0.0]))
    job = TrialJob(
        world_config=config,
        layout=layout,
        cfg=controller_config(config, Method.MPPI, 64),
        trial=0,
        master_seed=0,
    )
    result = run_trial(job)
    assert result.success
    assert result.steps <= 100


def test_experiment_is_reproducible(tmp_path):
    world_path = _write_world(tmp_path, FREE_WORLD)
    world = create_world(load_world_config(str(world_path)))
    dist, metadata = build_feasibility_model(world)
    model_path = tmp_path / "tiny.tt"
    save_feasibility_model(dist, metadata, model_path)

    cfg = ExperimentConfig(
        world=str(world_path),
        methods=list(Method),
        samples=[16],
        trials=2,
        seed=11,
        model=str(model_path),
    )
    config, first = run_experiment(cfg)
    _, second = run_experiment(cfg)
    assert config.id == "tiny"
    assert _timeless(first) == _timeless(second)
    assert [(r.method, r.trial) for r in first] == [(m, t) for m in Method for t in range(2)]
    assert len({r.seed for r in first if r.trial == 0}) == 1


def test_parallel_workers_match_serial(tmp_path):
    world_path = _write_world(tmp_path, FREE_WORLD)
    cfg = ExperimentConfig(world=str(world_path), methods=[Method.MPPI], samples=[16], trials=3, seed=2)
    _, serial = run_experiment(cfg)
    _, parallel = run_experiment(cfg.model_copy(update={"workers": 2}))
    assert _timeless(serial) == _timeless(parallel)


def test_missing_or_foreign_model(tmp_path):
    world_path = _write_world(tmp_path, FREE_WORLD)
    cfg = ExperimentConfig(
        world=str(world_path), methods=[Method.TT_POE_MPPI], samples=[8], trials=1, model=str(tmp_path / "none.tt")
    )
    with pytest.raises(ConfigurationError):
        run_experiment(cfg)

    other = create_world(load_world_config(str(_write_world(tmp_path, {**FREE_WORLD, "id": "other"}))))
    dist, metadata = build_feasibility_model(other)
    save_feasibility_model(dist, metadata, tmp_path / "other.tt")
    with pytest.raises(ConfigurationError):
        run_experiment(cfg.model_copy(update={"model": str(tmp_path / "other.tt")}))


def test_online_trial_rebuilds_model(tmp_path):
    world_path = _write_world(tmp_path, ONLINE_WORLD)
    cfg = ExperimentConfig(world=str(world_path), methods=[Method.TT_POE_MPPI], samples=[16], trials=1, seed=4)
    _, results = run_experiment(cfg)
    (result,) = results
    assert result.world == "tiny_online"
    assert result.rebuilds >= 1
    assert result.rebuild_time > 0.0
    assert 1 <= result.steps <= 30
