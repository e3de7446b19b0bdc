"""
World definitions: loading from JSON files and construction by kind
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from ttpoe.core.config import settings
from ttpoe.core.exceptions import ConfigurationError
from ttpoe.schemas.world import Obstacle, WorldConfig, WorldKind
from ttpoe.worlds.base import World
from ttpoe.worlds.manifold import SinusoidBandWorld, SphereShellWorld
from ttpoe.worlds.online import OnlineObstacleWorld
from ttpoe.worlds.pngrid import ObstacleWorld

logger = logging.getLogger(__name__)

PACKAGED_WORLDS_DIR = Path(__file__).resolve().parent.parent / "data" / "worlds"

WORLD_CLASSES = {
    WorldKind.FREE: World,
    WorldKind.PNGRID: ObstacleWorld,
    WorldKind.SPHERE: SphereShellWorld,
    WorldKind.SINUSOID: SinusoidBandWorld,
    WorldKind.ONLINE: OnlineObstacleWorld,
}


def worlds_dir() -> Path:
    return Path(settings.WORLDS_DIR) if settings.WORLDS_DIR else PACKAGED_WORLDS_DIR


def available_worlds() -> List[str]:
    return sorted(path.stem for path in worlds_dir().glob("*.json"))


def load_world_config(world: str) -> WorldConfig:
    """
    Load a world definition by id or by path to a JSON file

    Raises:
        ConfigurationError: Unknown id, unreadable file or schema violation
    """
    path = Path(world)
    if path.suffix != ".json":
        path = worlds_dir() / f"{world}.json"
    if not path.exists():
        raise ConfigurationError(
            f"unknown world {world!r}; available: {', '.join(available_worlds()) or 'none'}"
        )
    try:
        with open(path, "r") as f:
            data = json.load(f)
        config = WorldConfig.model_validate(data)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise ConfigurationError(f"{path} does not match the world schema: {e}") from e
    logger.debug(f"Loaded world {config.id} v{config.version} from {path}")
    return config


def create_world(
    config: WorldConfig,
    goal: Optional[Sequence[float]] = None,
    obstacles: Optional[Sequence[Obstacle]] = None
) -> World:
    cls = WORLD_CLASSES[config.kind]
    if issubclass(cls, ObstacleWorld):
        return cls(config, goal=goal, obstacles=obstacles)
    return cls(config, goal=goal)
