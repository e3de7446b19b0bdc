"""
Validation utilities for world definitions and experiment overrides
"""
from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import ValidationError

from ttpoe.core.config import settings
from ttpoe.schemas.controller import ControllerConfig
from ttpoe.schemas.world import DiscObstacle, RectObstacle, WorldConfig

# Controller fields an experiment may not override
_FIXED_FIELDS = {"N", "method"}


def validate_world_config(config: WorldConfig) -> Tuple[bool, List[str]]:
    """
    Check a world definition beyond its schema

    Args:
        config: Parsed world definition

    Returns:
        Tuple of (is_valid, error_messages)
    """
    errors = []

    # Obstacles must overlap the box somewhere
    for i, obstacle in enumerate(config.obstacles):
        center = np.asarray(obstacle.center)
        if isinstance(obstacle, RectObstacle):
            reach = np.asarray(obstacle.half_extents)
        elif isinstance(obstacle, DiscObstacle):
            reach = np.full(2, obstacle.radius)
        else:
            continue
        if np.any(np.abs(center) - reach > config.x_max):
            errors.append(f"Obstacle {i} lies entirely outside the {config.x_max} m box")

    if config.obstacles and config.dims != 2:
        errors.append(f"Obstacles need a planar world, got dims={config.dims}")

    if config.state_bounds is not None:
        for k, (lower, upper) in enumerate(config.state_bounds):
            if lower < -config.x_max or upper > config.x_max:
                errors.append(f"State bound {k} [{lower}, {upper}] exceeds x_max={config.x_max}")

    layout = config.layout
    if layout is not None:
        if layout.count_min > layout.count_max:
            errors.append(f"Layout count_min={layout.count_min} exceeds count_max={layout.count_max}")
        if layout.radius_min > layout.radius_max:
            errors.append(f"Layout radius_min={layout.radius_min} exceeds radius_max={layout.radius_max}")
        for name in ("x_range", "y_range", "endpoint_y"):
            lower, upper = getattr(layout, name)
            if lower > upper:
                errors.append(f"Layout {name} [{lower}, {upper}] is reversed")
        for name in ("start_x", "goal_x"):
            if abs(getattr(layout, name)) > config.x_max:
                errors.append(f"Layout {name} lies outside the {config.x_max} m box")

    learn = config.learn
    entries = int(np.prod(learn.state_counts(config.dims), dtype=np.int64)) * learn.action_nodes ** config.dims
    if entries > settings.MAX_DENSE_ENTRIES:
        errors.append(
            f"Learning grid has {entries} entries, above MAX_DENSE_ENTRIES={settings.MAX_DENSE_ENTRIES}"
        )

    is_valid = len(errors) == 0
    return is_valid, errors


def validate_controller_overrides(overrides: Dict[str, Any]) -> Tuple[bool, List[str]]:
    """
    Check controller overrides of an experiment against ControllerConfig

    Args:
        overrides: Field name -> value

    Returns:
        Tuple of (is_valid, error_messages)
    """
    errors = []
    fields = set(ControllerConfig.model_fields)

    for name in overrides:
        if name in _FIXED_FIELDS:
            errors.append(f"'{name}' is set by the experiment, not by controller overrides")
        elif name not in fields:
            errors.append(f"Unknown controller field '{name}'")

    if errors:
        return False, errors

    # Validate values against a complete placeholder config
    base = {"H": 1, "N": 1, "beta": 1.0, "dt": 0.1, "u_max": 1.0, "sigma": 1.0}
    try:
        ControllerConfig(**{**base, **overrides})
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"])
            errors.append(f"Invalid value for '{location}': {error['msg']}")

    is_valid = len(errors) == 0
    return is_valid, errors
