"""
Planar point mass among obstacles (PNGRID)
"""
from typing import Optional, Sequence

import numpy as np

from ttpoe.schemas.world import DiscObstacle, Obstacle, RectObstacle, WorldConfig, WorldKind
from ttpoe.worlds.base import World


def obstacle_hits(obstacle: Obstacle, x: np.ndarray, margin: float) -> np.ndarray:
    """Points inside the obstacle inflated by `margin`; x is (..., 2)"""
    center = np.asarray(obstacle.center)
    if isinstance(obstacle, RectObstacle):
        extents = np.asarray(obstacle.half_extents) + margin
        return np.all(np.abs(x - center) < extents, axis=-1)
    if isinstance(obstacle, DiscObstacle):
        return np.sum((x - center) ** 2, axis=-1) < (obstacle.radius + margin) ** 2
    raise TypeError(f"unsupported obstacle {obstacle!r}")


class ObstacleWorld(World):
    """Planar box with rectangular and disc obstacles"""

    kind = WorldKind.PNGRID

    def __init__(
        self,
        config: WorldConfig,
        goal: Optional[Sequence[float]] = None,
        obstacles: Optional[Sequence[Obstacle]] = None
    ):
        super().__init__(config, goal)
        self.obstacles = tuple(config.obstacles if obstacles is None else obstacles)

    @property
    def clearance_factor(self) -> float:
        if any(isinstance(obstacle, DiscObstacle) for obstacle in self.obstacles):
            return float(np.sqrt(2.0))
        return 1.0

    def _hits(self, x: np.ndarray, margin: float) -> np.ndarray:
        hits = np.zeros(x.shape[:-1], dtype=bool)
        for obstacle in self.obstacles:
            hits |= obstacle_hits(obstacle, x, margin)
        return hits
