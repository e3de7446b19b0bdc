"""
Obstacles that become known to the planner only once the agent is close
"""
from typing import FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from ttpoe.core.exceptions import ConfigurationError
from ttpoe.schemas.world import DiscObstacle, Obstacle, WorldConfig, WorldKind
from ttpoe.worlds.base import MAX_LAYOUT_ATTEMPTS, TrialLayout
from ttpoe.worlds.pngrid import ObstacleWorld


class OnlineObstacleWorld(ObstacleWorld):
    """
    Ground-truth world with a random disc layout per trial

    Collision checks and realized costs use every obstacle; planning uses
    `planning_view`, which holds only the obstacles detected so far.
    """

    kind = WorldKind.ONLINE

    def __init__(
        self,
        config: WorldConfig,
        goal: Optional[Sequence[float]] = None,
        obstacles: Optional[Sequence[Obstacle]] = None
    ):
        if config.layout is None:
            raise ConfigurationError(f"online world {config.id} needs a random layout section")
        super().__init__(config, goal, obstacles)

    @property
    def clearance_factor(self) -> float:
        return float(np.sqrt(2.0))

    def visible_indices(self, x: np.ndarray) -> FrozenSet[int]:
        """Obstacles whose centers lie within visibility_range horizontally of the agent"""
        x = np.asarray(x, dtype=np.float64)
        return frozenset(
            i for i, obstacle in enumerate(self.obstacles)
            if abs(obstacle.center[0] - x[0]) < self.config.visibility_range
        )

    def visible_obstacles(self, x: np.ndarray) -> List[Obstacle]:
        return [self.obstacles[i] for i in sorted(self.visible_indices(x))]

    def planning_view(self, known: Iterable[int]) -> ObstacleWorld:
        """Planner's world: known obstacles only, no collision margin"""
        config = self.config.model_copy(update={"margin": 0.0})
        return ObstacleWorld(config, goal=self.goal, obstacles=[self.obstacles[i] for i in sorted(known)])

    def sample_trial(self, rng: np.random.Generator) -> TrialLayout:
        """Random discs between a start on the left and a goal on the right"""
        layout = self.config.layout
        count = int(rng.integers(layout.count_min, layout.count_max + 1))
        obstacles = [
            DiscObstacle(
                center=[float(rng.uniform(*layout.x_range)), float(rng.uniform(*layout.y_range))],
                radius=float(rng.uniform(layout.radius_min, layout.radius_max)),
            )
            for _ in range(count)
        ]
        truth = OnlineObstacleWorld(self.config, obstacles=obstacles)
        for _ in range(MAX_LAYOUT_ATTEMPTS):
            start = np.array([layout.start_x, rng.uniform(*layout.endpoint_y)])
            goal = np.array([layout.goal_x, rng.uniform(*layout.endpoint_y)])
            if not truth.collides(start, margin=0.0) and not truth.collides(goal, margin=0.0):
                return TrialLayout(start=start, goal=goal, obstacles=obstacles)
        raise ConfigurationError(f"random layout of {self.config.id} blocks every start and goal")
