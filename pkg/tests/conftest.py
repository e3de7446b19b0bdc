import numpy as np
import pytest

from ttpoe.schemas.world import WorldConfig
from ttpoe.worlds import create_world


def _world_config(**overrides) -> WorldConfig:
    data = {
        "id": "test",
        "kind": "free",
        "dims": 2,
        "dt": 0.1,
        "x_max": 1.25,
        "u_max": 1.0,
        "margin": 0.0,
        "success": {"max_steps": 100, "max_cost": 1e30},
        "learn": {"state_nodes": 11, "action_nodes": 5, "max_rank": 500, "eps": 1e-12},
        "controller": {"H": 5, "covariance": 0.125, "beta": 0.05},
    }
    data.update(overrides)
    return WorldConfig.model_validate(data)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_world_config():
    """Factory for small world definitions; keyword arguments replace top-level fields"""
    return _world_config


@pytest.fixture
def random_tensor(rng):
    def make(shape, low=0.0):
        return rng.uniform(low, 1.0, size=shape)
    return make


@pytest.fixture
def small_pngrid():
    """Planar obstacle world with one central block and the goal at (0.5, -0.4)"""
    config = _world_config(
        id="small_pngrid",
        kind="pngrid",
        margin=0.05,
        min_start_goal_distance=1.0,
        obstacles=[{"shape": "rect", "center": [0.0, 0.0], "half_extents": [0.25, 0.2]}],
        learn={"state_nodes": 21, "action_nodes": 11, "max_rank": 200, "eps": 1e-10},
    )
    return create_world(config, goal=[0.5, -0.4])
