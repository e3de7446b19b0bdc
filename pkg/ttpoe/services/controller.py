"""
Sampling-based receding-horizon controllers

MPPI, Proj-MPPI and TT-PoE-MPPI share the rollout / weight / update kernel
and differ only in how the N action sequences of a step are drawn:

- mppi: Gaussian sequences clipped to the action bound
- proj_mppi: Gaussian actions pulled toward zero until feasible, along the rollout
- tt_poe_mppi: actions drawn from the product of the learned feasibility
  model and the Gaussian policy, conditioned on each sample's own state
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ttpoe.core.config import settings
from ttpoe.core.exceptions import (
    ConfigurationError,
    DegenerateWeightsError,
    InvalidInputError,
    ShapeMismatchError,
)
from ttpoe.schemas.controller import ControllerConfig, Method
from ttpoe.schemas.world import WorldConfig
from ttpoe.services.poe import DiagonalGaussian, product_policy
from ttpoe.tensor.tt_dist import TTDistribution, sample_conditional
from ttpoe.worlds.base import World

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianPolicy:
    """Per-step action means and standard deviations over the horizon, both (H, d_u)"""

    means: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        sigmas = np.asarray(self.sigmas, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape != sigmas.shape:
            raise ShapeMismatchError(f"means {means.shape} and sigmas {sigmas.shape} must both be (H, d_u)")
        if not np.all(sigmas > 0):
            raise InvalidInputError("policy sigmas must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)

    @classmethod
    def zeros(cls, horizon: int, d_u: int, sigma: float) -> "GaussianPolicy":
        return cls(np.zeros((horizon, d_u)), np.full((horizon, d_u), sigma))

    @property
    def horizon(self) -> int:
        return self.means.shape[0]

    def shift(self) -> "GaussianPolicy":
        """Drop the executed step and repeat the last mean"""
        means = np.concatenate([self.means[1:], self.means[-1:]], axis=0)
        return replace(self, means=means)


@dataclass(frozen=True)
class RolloutBatch:
    """actions (N, H, d_u), states (N, H+1, d_x), costs (N,)"""

    actions: np.ndarray
    states: np.ndarray
    costs: np.ndarray

    @property
    def size(self) -> int:
        return self.actions.shape[0]


@dataclass
class StepDiagnostics:
    """Filled by a step function when passed in"""

    samples: int = 0
    violations: int = 0
    degenerate_samples: int = 0
    degenerate_weights: bool = False
    batch: Optional[RolloutBatch] = None
    weights: Optional[np.ndarray] = None
    alphas: Optional[np.ndarray] = None

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.samples if self.samples else 0.0


def controller_config(
    world: WorldConfig,
    method: Method,
    N: int,
    overrides: Optional[Dict[str, Any]] = None
) -> ControllerConfig:
    """Controller settings of a task: world defaults, then explicit overrides"""
    defaults = world.controller
    values: Dict[str, Any] = {
        "H": defaults.H,
        "N": N,
        "beta": defaults.beta,
        "gamma": defaults.gamma,
        "dt": world.dt,
        "u_max": world.u_max,
        "sigma": float(np.sqrt(defaults.covariance)),
        "method": method,
    }
    values.update(overrides or {})
    return ControllerConfig(**values)


def mppi_weights(costs: np.ndarray, beta: float) -> np.ndarray:
    """
    Softmax of -costs/beta with max-subtraction

    Raises:
        DegenerateWeightsError: Every cost is +inf
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 1 or costs.size == 0:
        raise InvalidInputError("costs must be a non-empty vector")
    if beta <= 0:
        raise InvalidInputError(f"temperature must be positive, got {beta}")
    if np.any(np.isnan(costs)) or np.any(costs == -np.inf):
        raise InvalidInputError("costs must not be NaN or -inf")
    finite = np.isfinite(costs)
    if not np.any(finite):
        raise DegenerateWeightsError("every sample has infinite cost")
    shifted = costs - np.min(costs[finite])
    weights = np.exp(-shifted / beta)
    return weights / np.sum(weights)


def mppi_update(policy: GaussianPolicy, batch: RolloutBatch, weights: np.ndarray, gamma: float) -> GaussianPolicy:
    """mu <- (1 - gamma) mu + gamma * sum_i w_i u_i per horizon step; sigmas unchanged"""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (batch.size,):
        raise ShapeMismatchError(f"expected {batch.size} weights, got shape {weights.shape}")
    if batch.actions.shape[1:] != policy.means.shape:
        raise ShapeMismatchError(
            f"batch actions {batch.actions.shape[1:]} do not match policy {policy.means.shape}"
        )
    weighted = np.tensordot(weights, batch.actions, axes=([0], [0]))
    return replace(policy, means=(1.0 - gamma) * policy.means + gamma * weighted)


def rollout(world: World, x0: np.ndarray, actions: np.ndarray, dt: Optional[float] = None) -> RolloutBatch:
    """Propagate every action sequence from x0 and score it with the world's planning cost"""
    actions = np.asarray(actions, dtype=np.float64)
    n, horizon, _ = actions.shape
    states = np.empty((n, horizon + 1, world.d_x))
    states[:, 0] = x0
    for h in range(horizon):
        states[:, h + 1] = world.dynamics_step(states[:, h], actions[:, h], dt)
    return RolloutBatch(actions=actions, states=states, costs=world.trajectory_costs(states, actions))


def normalize_costs(costs: np.ndarray) -> np.ndarray:
    """Divide by the minimum cost; a nonpositive minimum is shifted to 1 first"""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.size == 0:
        raise InvalidInputError("costs must be non-empty")
    low = np.min(costs)
    if not np.isfinite(low):
        return costs
    if low > 0:
        return costs / low
    logger.warning(f"Minimum rollout cost {low:.3g} is not positive; shifting costs before normalizing")
    return costs - low + 1.0


def inject_zero_action(
    batch: RolloutBatch,
    world: World,
    x0: np.ndarray,
    dt: Optional[float] = None
) -> RolloutBatch:
    """Replace sample 0 by the all-zero action sequence and its rollout"""
    zero = rollout(world, x0, np.zeros_like(batch.actions[:1]), dt)
    actions = batch.actions.copy()
    states = batch.states.copy()
    costs = np.array(batch.costs, dtype=np.float64)
    actions[0], states[0], costs[0] = zero.actions[0], zero.states[0], zero.costs[0]
    return RolloutBatch(actions=actions, states=states, costs=costs)


def _count_violations(
    world: World,
    batch: RolloutBatch,
    dt: float,
    skip: Optional[np.ndarray] = None
) -> int:
    horizon = batch.actions.shape[1]
    bad = ~world.feasible(batch.states[:, :horizon], batch.actions, dt=dt)
    if skip is not None:
        bad &= ~skip
    return int(np.count_nonzero(bad[1:]))


def _finish_step(
    world: World,
    x0: np.ndarray,
    policy: GaussianPolicy,
    batch: RolloutBatch,
    cfg: ControllerConfig,
    diagnostics: Optional[StepDiagnostics]
) -> Tuple[np.ndarray, GaussianPolicy]:
    """Zero-action injection, normalization, weighting, update, shift"""
    batch = inject_zero_action(batch, world, x0, cfg.dt)
    batch = replace(batch, costs=normalize_costs(batch.costs))
    if diagnostics is not None:
        diagnostics.batch = batch
    try:
        weights = mppi_weights(batch.costs, cfg.beta)
    except DegenerateWeightsError:
        logger.warning("Degenerate importance weights; holding position")
        if diagnostics is not None:
            diagnostics.degenerate_weights = True
        return np.zeros(world.d_u), policy.shift()

    updated = mppi_update(policy, batch, weights, cfg.gamma)
    if diagnostics is not None:
        diagnostics.weights = weights
    u_star = updated.means[0].copy()
    logger.debug(f"{cfg.method.value} step: u*={np.round(u_star, 4).tolist()}, min cost {batch.costs.min():.4g}")
    return u_star, updated.shift()


def step_mppi(
    world: World,
    x0: np.ndarray,
    policy: GaussianPolicy,
    cfg: ControllerConfig,
    rng: np.random.Generator,
    diagnostics: Optional[StepDiagnostics] = None
) -> Tuple[np.ndarray, GaussianPolicy]:
    """Plain MPPI with actions clipped to the bound"""
    noise = rng.standard_normal((cfg.N,) + policy.means.shape) * policy.sigmas
    actions = np.clip(policy.means + noise, -cfg.u_max, cfg.u_max)
    batch = rollout(world, x0, actions, cfg.dt)
    if diagnostics is not None:
        diagnostics.samples = (cfg.N - 1) * policy.horizon
        diagnostics.violations = _count_violations(world, batch, cfg.dt)
    return _finish_step(world, x0, policy, batch, cfg, diagnostics)


def project_actions(
    world: World,
    x: np.ndarray,
    u: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    dt: Optional[float] = None
) -> np.ndarray:
    """
    Largest alpha in [0, 1] with world.feasible(x, alpha*u), by bisection

    Feasibility along the ray from 0 to u is taken to switch once. Rows
    feasible at alpha = 1 get 1; rows infeasible even at alpha = 0 get 0.

    Args:
        world: Planning world
        x: (N, d_x) states
        u: (N, d_u) proposed actions
        tol: Bisection interval width to stop at
        max_iter: Bisection iteration cap
        dt: Integration step, default the world's

    Returns:
        (N,) step fractions
    """
    tol = settings.PROJ_BISECTION_TOL if tol is None else tol
    max_iter = settings.PROJ_BISECTION_MAX_ITER if max_iter is None else max_iter
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))

    full = world.feasible(x, u, dt=dt)
    active = ~full & world.feasible(x, np.zeros_like(u), dt=dt)
    alpha = np.where(full, 1.0, 0.0)
    lo = np.zeros(len(u))
    hi = np.ones(len(u))
    for _ in range(max_iter):
        if not np.any(active) or np.max((hi - lo)[active]) < tol:
            break
        mid = 0.5 * (lo + hi)
        ok = world.feasible(x, mid[:, None] * u, dt=dt)
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid, hi)
    alpha[active] = lo[active]
    return alpha


def step_proj_mppi(
    world: World,
    x0: np.ndarray,
    policy: GaussianPolicy,
    cfg: ControllerConfig,
    rng: np.random.Generator,
    diagnostics: Optional[StepDiagnostics] = None
) -> Tuple[np.ndarray, GaussianPolicy]:
    """MPPI whose sampled actions are projected onto the feasible set along each rollout"""
    horizon = policy.horizon
    noise = rng.standard_normal((cfg.N,) + policy.means.shape) * policy.sigmas
    proposed = policy.means + noise
    actions = np.empty_like(proposed)
    alphas = np.empty((cfg.N, horizon))
    x = np.broadcast_to(np.asarray(x0, dtype=np.float64), (cfg.N, world.d_x))
    for h in range(horizon):
        alphas[:, h] = project_actions(world, x, proposed[:, h], dt=cfg.dt)
        actions[:, h] = alphas[:, h, None] * proposed[:, h]
        x = world.dynamics_step(x, actions[:, h], cfg.dt)
    batch = rollout(world, x0, actions, cfg.dt)
    if diagnostics is not None:
        diagnostics.alphas = alphas
        diagnostics.samples = (cfg.N - 1) * horizon
        diagnostics.violations = _count_violations(world, batch, cfg.dt)
    return _finish_step(world, x0, policy, batch, cfg, diagnostics)


def step_tt_poe_mppi(
    world: World,
    x0: np.ndarray,
    policy: GaussianPolicy,
    feas: TTDistribution,
    cfg: ControllerConfig,
    rng: np.random.Generator,
    diagnostics: Optional[StepDiagnostics] = None
) -> Tuple[np.ndarray, GaussianPolicy]:
    """
    MPPI whose actions come from feasibility x Gaussian, sampled per state

    At every horizon step the Gaussian of that step scales the action cores of
    the joint (state, action) model, and each sample draws its action
    conditioned on its own predicted state. Samples whose conditional is empty
    take the zero action and are counted as degenerate.
    """
    if feas.d != world.d_x + world.d_u:
        raise ShapeMismatchError(
            f"feasibility model has {feas.d} dims, world needs {world.d_x} state + {world.d_u} action dims"
        )
    horizon = policy.horizon
    state_grid = feas.grid.subgrid(0, world.d_x)
    states = np.empty((cfg.N, horizon + 1, world.d_x))
    actions = np.empty((cfg.N, horizon, world.d_u))
    degenerate = np.zeros((cfg.N, horizon), dtype=bool)
    states[:, 0] = x0
    for h in range(horizon):
        expert = DiagonalGaussian(policy.means[h], policy.sigmas[h])
        product = product_policy(feas, expert, action_offset=world.d_x)
        drawn = sample_conditional(product, state_grid.clip(states[:, h]), rng)
        degenerate[:, h] = drawn.degenerate
        actions[:, h] = np.where(drawn.degenerate[:, None], 0.0, drawn.points)
        states[:, h + 1] = world.dynamics_step(states[:, h], actions[:, h], cfg.dt)

    batch = RolloutBatch(actions=actions, states=states, costs=world.trajectory_costs(states, actions))
    if np.any(degenerate):
        logger.warning(f"{int(degenerate.sum())} samples found no feasible action and hold position")
    if diagnostics is not None:
        diagnostics.samples = (cfg.N - 1) * horizon
        diagnostics.violations = _count_violations(world, batch, cfg.dt, skip=degenerate)
        diagnostics.degenerate_samples = int(np.count_nonzero(degenerate[1:]))
    return _finish_step(world, x0, policy, batch, cfg, diagnostics)


class Controller:
    """Receding-horizon controller holding its Gaussian policy between steps; not thread-safe"""

    def __init__(self, world: World, cfg: ControllerConfig, feas: Optional[TTDistribution] = None):
        if cfg.method == Method.TT_POE_MPPI and feas is None:
            raise ConfigurationError("tt_poe_mppi needs a feasibility model")
        if feas is not None and not np.isclose(cfg.dt, world.dt):
            logger.warning(f"Controller dt {cfg.dt} differs from the dt {world.dt} the feasibility model was learned with")
        self.world = world
        self.cfg = cfg
        self.feas = feas
        self.policy = GaussianPolicy.zeros(cfg.H, world.d_u, cfg.sigma)

    def reset(self) -> None:
        self.policy = GaussianPolicy.zeros(self.cfg.H, self.world.d_u, self.cfg.sigma)

    def update_world(self, world: World, feas: Optional[TTDistribution] = None) -> None:
        """Swap in a new planning world (and model) without resetting the policy"""
        self.world = world
        if feas is not None:
            self.feas = feas

    def step(self, x: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, StepDiagnostics]:
        diagnostics = StepDiagnostics()
        if self.cfg.method == Method.MPPI:
            u, self.policy = step_mppi(self.world, x, self.policy, self.cfg, rng, diagnostics)
        elif self.cfg.method == Method.PROJ_MPPI:
            u, self.policy = step_proj_mppi(self.world, x, self.policy, self.cfg, rng, diagnostics)
        else:
            u, self.policy = step_tt_poe_mppi(self.world, x, self.policy, self.feas, self.cfg, rng, diagnostics)
        return u, diagnostics
