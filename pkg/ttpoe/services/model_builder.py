"""
Building and persisting feasibility models of benchmark worlds
"""
import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ttpoe.core.config import settings
from ttpoe.core.exceptions import ConfigurationError, ModelFormatError
from ttpoe.schemas.model import ModelMetadata
from ttpoe.schemas.world import LearnConfig
from ttpoe.tensor import tt_io
from ttpoe.tensor.grid import Grid
from ttpoe.tensor.tt_dist import TTDistribution, from_indicator
from ttpoe.worlds.base import World

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def build_feasibility_model(
    world: World,
    learn: Optional[LearnConfig] = None,
    max_entries: Optional[int] = None
) -> Tuple[TTDistribution, ModelMetadata]:
    """
    Learn the (state, action) feasibility distribution of a world

    The predicate is world.learning_feasible: the planning margin plus the
    learning clearance, evaluated on the coarse learning grid. TT-SVD
    follows, then core-level refinement. A clearance below the grid's
    interpolation reach is logged, since samples between nodes may then
    leave the feasible set.

    Raises:
        CapacityError: The dense build exceeds max_entries
    """
    learn = learn or world.config.learn
    grid = world.learn_grid(learn)
    refine = world.refine_factors(learn)
    required = world.required_inflation(learn)
    if learn.inflation < required:
        logger.warning(
            f"Learning clearance {learn.inflation:.4f} m of {world.config.id} is below the "
            f"interpolation reach {required:.4f} m; interpolated samples may be infeasible"
        )

    started = time.perf_counter()
    dist = from_indicator(
        lambda states, actions: world.learning_feasible(states, actions, learn),
        grid,
        max_rank=learn.max_rank,
        eps=learn.eps,
        refine=refine,
        state_dims=world.d_x,
        max_entries=max_entries,
    )
    elapsed = time.perf_counter() - started

    metadata = ModelMetadata(
        world_id=world.config.id,
        world_version=world.config.version,
        grid=list(dist.grid.dims),
        state_dims=world.d_x,
        margin=world.margin,
        inflation=learn.inflation,
        refine=refine,
        max_rank=learn.max_rank,
        eps=learn.eps,
        ranks=list(dist.model.ranks),
        evaluations=int(np.prod(grid.shape, dtype=np.int64)),
        build_seconds=elapsed,
        sha256="",
    )
    logger.info(
        f"Built feasibility model of {world.config.id}: ranks {dist.model.ranks}, "
        f"{dist.model.parameters} parameters, {elapsed:.3f}s"
    )
    return dist, metadata


def default_model_path(world_id: str) -> Path:
    return Path(settings.MODEL_DIR) / f"{world_id}.tt"


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def save_feasibility_model(dist: TTDistribution, metadata: ModelMetadata, path: PathLike) -> ModelMetadata:
    """Write the binary model and its JSON sidecar; returns the metadata with the file digest"""
    data = tt_io.to_bytes(dist.model)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    metadata = metadata.model_copy(update={"sha256": hashlib.sha256(data).hexdigest()})
    with open(sidecar_path(path), "w") as f:
        json.dump(metadata.model_dump(mode="json"), f, indent=2)
    logger.info(f"Saved {path} ({len(data)} bytes)")
    return metadata


def load_feasibility_model(path: PathLike) -> Tuple[TTDistribution, ModelMetadata]:
    """
    Read a model and its sidecar

    Raises:
        ConfigurationError: Model or sidecar missing
        ModelFormatError: Corrupt file, digest mismatch, or grid inconsistent with the cores
    """
    path = Path(path)
    meta_path = sidecar_path(path)
    if not path.exists() or not meta_path.exists():
        raise ConfigurationError(f"feasibility model {path} (with sidecar {meta_path.name}) not found")
    data = path.read_bytes()
    try:
        with open(meta_path, "r") as f:
            metadata = ModelMetadata.model_validate(json.load(f))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ModelFormatError(f"invalid sidecar {meta_path}: {e}") from e
    digest = hashlib.sha256(data).hexdigest()
    if metadata.sha256 and metadata.sha256 != digest:
        raise ModelFormatError(f"{path} does not match the digest recorded in {meta_path.name}")
    model = tt_io.from_bytes(data)
    grid = Grid(tuple(metadata.grid))
    if grid.shape != model.shape:
        raise ModelFormatError(f"sidecar grid {grid.shape} does not match model shape {model.shape}")
    return TTDistribution(model, grid), metadata
