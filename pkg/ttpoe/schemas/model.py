"""
Pydantic schema for the metadata sidecar of a persisted feasibility model
"""
from typing import List

from pydantic import BaseModel, Field

from ttpoe.schemas.grid import GridDim


class ModelMetadata(BaseModel):
    """Sidecar written next to every .tt file"""
    format_version: int = 1
    world_id: str
    world_version: int = 1
    grid: List[GridDim]
    state_dims: int = Field(ge=0)
    margin: float = 0.0
    inflation: float = 0.0
    refine: List[int]
    max_rank: int
    eps: float
    ranks: List[int]
    evaluations: int
    build_seconds: float
    sha256: str
