"""
Closed-loop trials and paired experiments across methods and sample counts
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from ttpoe.core.exceptions import ConfigurationError
from ttpoe.schemas.controller import ControllerConfig, Method
from ttpoe.schemas.experiment import ExperimentConfig, TrialResult
from ttpoe.schemas.world import TrialSpec, WorldConfig
from ttpoe.services.controller import Controller, controller_config
from ttpoe.services.model_builder import build_feasibility_model, default_model_path, load_feasibility_model
from ttpoe.tensor.tt_dist import TTDistribution
from ttpoe.worlds.base import History, TrialLayout
from ttpoe.worlds.online import OnlineObstacleWorld
from ttpoe.worlds.registry import create_world, load_world_config

logger = logging.getLogger(__name__)

LAYOUT_STREAM = 0
CONTROL_STREAM = 1


def trial_seed(master: int, trial: int) -> int:
    """Integer seed of a trial, recorded with its results"""
    return int(np.random.SeedSequence([master, trial]).generate_state(1)[0])


def trial_rng(master: int, trial: int, stream: int) -> np.random.Generator:
    """Independent generator per (trial, stream); identical for every method"""
    return np.random.default_rng(np.random.SeedSequence([master, trial, stream]))


def sample_layouts(world_config: WorldConfig, trials: int, master: int) -> List[TrialLayout]:
    world = create_world(world_config)
    return [world.sample_trial(trial_rng(master, i, LAYOUT_STREAM)) for i in range(trials)]


@dataclass(frozen=True)
class TrialJob:
    world_config: WorldConfig
    layout: TrialLayout
    cfg: ControllerConfig
    trial: int
    master_seed: int

    @property
    def spec(self) -> TrialSpec:
        return TrialSpec(
            seed=trial_seed(self.master_seed, self.trial),
            start=[float(v) for v in self.layout.start],
            goal=[float(v) for v in self.layout.goal],
            method=self.cfg.method,
            N=self.cfg.N,
            world_id=self.world_config.id,
            obstacles=list(self.layout.obstacles),
        )


def run_trial(job: TrialJob, feas: Optional[TTDistribution] = None) -> TrialResult:
    """
    One closed-loop run from start to goal

    In the online world the planner only knows the obstacles seen so far; its
    planning world (and, for tt_poe_mppi, the feasibility model) is rebuilt
    whenever that set grows. Trials whose task counts any collision as failure
    stop at the first collision.
    """
    config = job.world_config
    logger.debug(f"Trial spec: {job.spec.model_dump_json()}")
    truth = create_world(config, goal=job.layout.goal, obstacles=job.layout.obstacles or None)
    online = isinstance(truth, OnlineObstacleWorld)
    uses_model = job.cfg.method == Method.TT_POE_MPPI
    known: FrozenSet[int] = frozenset()
    planner = truth.planning_view(known) if online else truth
    controller = Controller(planner, job.cfg, feas)
    rng = trial_rng(job.master_seed, job.trial, CONTROL_STREAM)
    stop_on_collision = config.costs.collision >= config.success.max_cost

    x = np.array(job.layout.start, dtype=np.float64)
    states = [x]
    actions = []
    step_times: List[float] = []
    rebuild_times: List[float] = []
    violations = samples = degenerate_steps = 0

    for t in range(config.success.max_steps):
        if online:
            visible = truth.visible_indices(x)
            if not visible <= known:
                known = known | visible
                planner = truth.planning_view(known)
                started = time.perf_counter()
                rebuilt = build_feasibility_model(planner)[0] if uses_model else None
                if uses_model:
                    rebuild_times.append(time.perf_counter() - started)
                    logger.info(
                        f"Trial {job.trial}: {len(known)} known obstacles, model rebuilt in {rebuild_times[-1]:.3f}s"
                    )
                controller.update_world(planner, rebuilt)

        started = time.perf_counter()
        u, diagnostics = controller.step(x, rng)
        step_times.append(time.perf_counter() - started)
        violations += diagnostics.violations
        samples += diagnostics.samples
        degenerate_steps += int(diagnostics.degenerate_samples > 0 or diagnostics.degenerate_weights)

        x = truth.dynamics_step(x, u, job.cfg.dt)
        states.append(x)
        actions.append(u)
        if truth.reached(x):
            break
        if stop_on_collision and truth.collides(x, margin=0.0):
            logger.debug(f"Trial {job.trial}: collision at step {t + 1}")
            break

    history = History(states=np.array(states), actions=np.array(actions).reshape(-1, truth.d_u))
    return TrialResult(
        world=config.id,
        method=job.cfg.method,
        samples=job.cfg.N,
        trial=job.trial,
        seed=trial_seed(job.master_seed, job.trial),
        success=truth.is_success(history),
        steps=history.steps,
        total_cost=truth.realized_cost(history),
        violation_fraction=violations / samples if samples else 0.0,
        degenerate_steps=degenerate_steps,
        step_time=float(np.mean(step_times)) if step_times else 0.0,
        rebuilds=len(rebuild_times),
        rebuild_time=float(np.mean(rebuild_times)) if rebuild_times else 0.0,
    )


# Shared read-only model of the worker processes
_worker_feas: Optional[TTDistribution] = None


def _init_worker(feas: Optional[TTDistribution]) -> None:
    global _worker_feas
    _worker_feas = feas


def _run_job(job: TrialJob) -> TrialResult:
    return run_trial(job, _worker_feas if job.cfg.method == Method.TT_POE_MPPI else None)


def resolve_model(
    cfg: ExperimentConfig,
    world_config: WorldConfig
) -> Optional[TTDistribution]:
    """
    Feasibility model for tt_poe_mppi, or None when that method is not requested

    The online world starts from a model of its obstacle-free planning view,
    built on the spot unless a file is given; other worlds need a built model.

    Raises:
        ConfigurationError: Model file missing or built for another world
    """
    if Method.TT_POE_MPPI not in cfg.methods:
        return None
    if cfg.model is None and world_config.kind == OnlineObstacleWorld.kind:
        world = create_world(world_config)
        return build_feasibility_model(world.planning_view(frozenset()))[0]

    path = Path(cfg.model) if cfg.model else default_model_path(world_config.id)
    feas, metadata = load_feasibility_model(path)
    if metadata.world_id != world_config.id:
        raise ConfigurationError(f"{path} was built for world {metadata.world_id}, not {world_config.id}")
    if metadata.world_version != world_config.version:
        logger.warning(
            f"{path} was built for {world_config.id} v{metadata.world_version}, running v{world_config.version}"
        )
    return feas


def plan_jobs(cfg: ExperimentConfig, world_config: WorldConfig) -> List[TrialJob]:
    """Every (method, samples, trial) combination; trial i shares its layout and seeds across methods"""
    layouts = sample_layouts(world_config, cfg.trials, cfg.seed)
    jobs = []
    for method in cfg.methods:
        for n in cfg.samples:
            ctrl = controller_config(world_config, method, n, cfg.controller)
            jobs.extend(
                TrialJob(world_config=world_config, layout=layout, cfg=ctrl, trial=i, master_seed=cfg.seed)
                for i, layout in enumerate(layouts)
            )
    return jobs


def run_experiment(cfg: ExperimentConfig) -> Tuple[WorldConfig, List[TrialResult]]:
    """Run all paired trials of an experiment; results sorted by method, samples, trial"""
    world_config = load_world_config(cfg.world)
    feas = resolve_model(cfg, world_config)
    jobs = plan_jobs(cfg, world_config)
    logger.info(
        f"Running {len(jobs)} trials on {world_config.id}: methods "
        f"{[m.value for m in cfg.methods]}, samples {cfg.samples}, {cfg.trials} trials, seed {cfg.seed}"
    )

    started = time.perf_counter()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(feas,)) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        _init_worker(feas)
        results = [_run_job(job) for job in jobs]

    order = {m: i for i, m in enumerate(Method)}
    results.sort(key=lambda r: (order[r.method], r.samples, r.trial))
    logger.info(f"Finished {len(results)} trials in {time.perf_counter() - started:.1f}s")
    return world_config, results
