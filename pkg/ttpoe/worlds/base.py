"""
Benchmark world contract: single-integrator dynamics, feasibility, costs, success
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ttpoe.core.config import settings
from ttpoe.core.exceptions import ConfigurationError, ShapeMismatchError
from ttpoe.schemas.world import LearnConfig, Obstacle, WorldConfig, WorldKind
from ttpoe.tensor.grid import Grid
from ttpoe.worlds.costs import reach_gated_cost

# Slack on box and action bounds for values that sit on the bound up to round-off
_BOUND_SLACK = 1e-9
MAX_LAYOUT_ATTEMPTS = 10_000


@dataclass(frozen=True)
class TrialLayout:
    """Start, goal and per-trial obstacles drawn for one trial"""

    start: np.ndarray
    goal: np.ndarray
    obstacles: List[Obstacle] = field(default_factory=list)


@dataclass(frozen=True)
class History:
    """Executed closed-loop trajectory: states (T+1, d_x), actions (T, d_u)"""

    states: np.ndarray
    actions: np.ndarray

    @property
    def steps(self) -> int:
        return self.actions.shape[0]


class World:
    """
    Box-bounded single integrator x' = x + u*dt

    The base class has no obstacles; subclasses add their collision geometry
    by overriding `_hits`. Instances are immutable after construction.
    """

    kind = WorldKind.FREE

    def __init__(self, config: WorldConfig, goal: Optional[Sequence[float]] = None):
        self.config = config
        self.goal = None if goal is None else self._as_state(goal)

    @property
    def d_x(self) -> int:
        return self.config.dims

    @property
    def d_u(self) -> int:
        return self.config.dims

    @property
    def dt(self) -> float:
        return self.config.dt

    @property
    def x_max(self) -> float:
        return self.config.x_max

    @property
    def u_max(self) -> float:
        return self.config.u_max

    @property
    def margin(self) -> float:
        return self.config.margin

    @property
    def goal_tolerance(self) -> float:
        return settings.GOAL_TOLERANCE

    @property
    def state_bounds(self) -> np.ndarray:
        """(d_x, 2) learning bounds of the state axes"""
        if self.config.state_bounds is not None:
            return np.asarray(self.config.state_bounds, dtype=np.float64)
        return np.tile([-self.x_max, self.x_max], (self.d_x, 1)).astype(np.float64)

    @property
    def clearance_factor(self) -> float:
        """Bound on the geometry's own distance per unit of per-axis (Chebyshev) displacement"""
        return 1.0

    def dynamics_step(self, x: np.ndarray, u: np.ndarray, dt: Optional[float] = None) -> np.ndarray:
        """x + u*dt (default: the task's dt); results outside the box are returned unclamped"""
        dt = self.dt if dt is None else dt
        return np.asarray(x, dtype=np.float64) + np.asarray(u, dtype=np.float64) * dt

    def in_bounds(self, x: np.ndarray, clearance: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.all(np.abs(x) <= self.x_max - clearance + _BOUND_SLACK, axis=-1)

    def _hits(self, x: np.ndarray, margin: float) -> np.ndarray:
        return np.zeros(np.shape(x)[:-1], dtype=bool)

    def collides(self, x: np.ndarray, margin: Optional[float] = None, clearance: float = 0.0) -> np.ndarray:
        """True where a state leaves the box shrunk by `clearance` or touches the geometry inflated by `margin`"""
        margin = self.margin if margin is None else margin
        x = np.asarray(x, dtype=np.float64)
        return ~self.in_bounds(x, clearance) | self._hits(x, margin)

    def feasible(
        self,
        x: np.ndarray,
        u: np.ndarray,
        margin: Optional[float] = None,
        dt: Optional[float] = None,
        clearance: float = 0.0
    ) -> np.ndarray:
        """Vectorized predicate: |u| <= u_max and the successor is collision-free"""
        u = np.asarray(u, dtype=np.float64)
        action_ok = np.all(np.abs(u) <= self.u_max + _BOUND_SLACK, axis=-1)
        return action_ok & ~self.collides(self.dynamics_step(x, u, dt), margin, clearance)

    def learning_feasible(self, x: np.ndarray, u: np.ndarray, learn: Optional[LearnConfig] = None) -> np.ndarray:
        """Predicate the feasibility model is learned from: obstacles and box tightened by learn.inflation"""
        learn = learn or self.config.learn
        return self.feasible(x, u, margin=self.margin + learn.inflation, clearance=learn.inflation)

    def learn_grid(self, learn: Optional[LearnConfig] = None) -> Grid:
        """Coarse (state, action) grid of the feasibility model"""
        learn = learn or self.config.learn
        bounds = [tuple(b) for b in self.state_bounds] + [(-self.u_max, self.u_max)] * self.d_u
        nodes = learn.state_counts(self.d_x) + [learn.action_nodes] * self.d_u
        return Grid.uniform(bounds, nodes)

    def refine_factors(self, learn: Optional[LearnConfig] = None) -> List[int]:
        learn = learn or self.config.learn
        return [learn.state_refine] * self.d_x + [learn.action_refine] * self.d_u

    def interpolation_reach(self, learn: Optional[LearnConfig] = None) -> float:
        """
        Largest per-axis offset between the successor of a query and that of
        any learning node it is interpolated from

        State axes interpolate within one coarse cell; action axes only when
        their cores are refined, otherwise samples sit on the nodes.
        """
        learn = learn or self.config.learn
        spacing = self.learn_grid(learn).spacing
        reach = float(np.max(spacing[:self.d_x]))
        if learn.action_refine > 1:
            reach += float(np.max(spacing[self.d_x:])) * self.dt
        return reach

    def required_inflation(self, learn: Optional[LearnConfig] = None) -> float:
        """Learning clearance under which every interpolated nonzero sample stays feasible"""
        return self.clearance_factor * self.interpolation_reach(learn)

    def trajectory_costs(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Planning cost of (N, H+1, d_x) states under (N, H, d_u) actions, with the planning margin"""
        self._require_goal()
        return reach_gated_cost(
            states, actions, self.goal, self.collides(states), self.config.costs, self.goal_tolerance
        )

    def realized_cost(self, history: History) -> float:
        """Executed-trajectory cost: no margins, a collision of the final state is charged too"""
        self._require_goal()
        states = history.states[None]
        return float(reach_gated_cost(
            states,
            history.actions[None],
            self.goal,
            self.collides(states, margin=0.0),
            self.config.costs,
            self.goal_tolerance,
            terminal_collision=True,
        )[0])

    def reached(self, x: np.ndarray) -> np.ndarray:
        self._require_goal()
        return np.linalg.norm(np.asarray(x, dtype=np.float64) - self.goal, axis=-1) < self.goal_tolerance

    def is_success(self, history: History) -> bool:
        """Goal reached within max_steps and realized cost below max_cost"""
        hits = np.flatnonzero(self.reached(history.states))
        if hits.size == 0 or hits[0] > self.config.success.max_steps:
            return False
        return self.realized_cost(history) < self.config.success.max_cost

    def sample_trial(self, rng: np.random.Generator) -> TrialLayout:
        """Uniform feasible start and goal at least min_start_goal_distance apart"""
        start = self._sample_free_point(rng)
        for _ in range(MAX_LAYOUT_ATTEMPTS):
            goal = self._sample_free_point(rng)
            if np.linalg.norm(goal - start) >= self.config.min_start_goal_distance:
                return TrialLayout(start=start, goal=goal)
        raise ConfigurationError(f"no goal found {self.config.min_start_goal_distance} m from the start")

    def _sample_free_point(self, rng: np.random.Generator) -> np.ndarray:
        pad = self.margin + self.goal_tolerance
        lower = np.maximum(self.state_bounds[:, 0], -self.x_max) + pad
        upper = np.minimum(self.state_bounds[:, 1], self.x_max) - pad
        for _ in range(MAX_LAYOUT_ATTEMPTS):
            point = rng.uniform(lower, upper)
            if not self.collides(point):
                return point
        raise ConfigurationError(f"world {self.config.id} has no free space to place a start or goal")

    def _require_goal(self) -> None:
        if self.goal is None:
            raise ConfigurationError(f"world {self.config.id} has no goal set")

    def _as_state(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d_x,):
            raise ShapeMismatchError(f"expected a state of dimension {self.d_x}, got shape {x.shape}")
        return x
