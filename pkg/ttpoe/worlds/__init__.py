from ttpoe.worlds.base import History, TrialLayout, World
from ttpoe.worlds.manifold import SinusoidBandWorld, SphereShellWorld, manifold_feasible
from ttpoe.worlds.online import OnlineObstacleWorld
from ttpoe.worlds.pngrid import ObstacleWorld
from ttpoe.worlds.registry import create_world, load_world_config

__all__ = [
    "History",
    "TrialLayout",
    "World",
    "ObstacleWorld",
    "OnlineObstacleWorld",
    "SphereShellWorld",
    "SinusoidBandWorld",
    "manifold_feasible",
    "create_world",
    "load_world_config",
]
