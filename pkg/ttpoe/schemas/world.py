"""
Pydantic schemas for benchmark world definitions
"""
from enum import Enum
from typing import List, Optional, Union, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ttpoe.schemas.controller import ControllerDefaults, Method


class WorldKind(str, Enum):
    PNGRID = "pngrid"
    SPHERE = "sphere"
    SINUSOID = "sinusoid"
    ONLINE = "online"
    FREE = "free"


class RectObstacle(BaseModel):
    """Axis-aligned rectangle given by center and half extents [m]"""
    model_config = ConfigDict(frozen=True)

    shape: Literal["rect"] = "rect"
    center: List[float] = Field(min_length=2, max_length=2)
    half_extents: List[float] = Field(min_length=2, max_length=2)

    @field_validator("half_extents")
    @classmethod
    def _positive_extents(cls, value: List[float]) -> List[float]:
        if any(v <= 0 for v in value):
            raise ValueError("half extents must be positive")
        return value


class DiscObstacle(BaseModel):
    """Disc given by center and radius [m]"""
    model_config = ConfigDict(frozen=True)

    shape: Literal["disc"] = "disc"
    center: List[float] = Field(min_length=2, max_length=2)
    radius: float = Field(gt=0)


Obstacle = Union[RectObstacle, DiscObstacle]


class CostWeights(BaseModel):
    """Weights of the reach-gated quadratic cost"""
    goal: float = Field(default=10.0, ge=0)
    collision: float = Field(default=1e30, ge=0)
    action: float = Field(default=1e-3, ge=0)
    terminal: float = Field(default=1e3, ge=0)


class SuccessCriteria(BaseModel):
    """Reach within max_steps with realized cost below max_cost"""
    max_steps: int = Field(gt=0)
    max_cost: float = Field(gt=0)


class LearnConfig(BaseModel):
    """Discretization used to learn the feasibility model"""
    state_nodes: Union[int, List[int]] = Field(description="Nodes per state dim, one count for all or one per dim")
    action_nodes: int = Field(ge=2)
    state_refine: int = Field(default=1, ge=1)
    action_refine: int = Field(default=1, ge=1)
    max_rank: int = Field(default=300, ge=1)
    eps: float = Field(default=1e-6, ge=0)
    inflation: float = Field(
        default=0.0, ge=0, description="Extra clearance used only while learning; covers interpolation between nodes"
    )

    @field_validator("state_nodes")
    @classmethod
    def _check_state_nodes(cls, v):
        counts = [v] if isinstance(v, int) else v
        if not counts or any(n < 2 for n in counts):
            raise ValueError("every state dimension needs at least 2 nodes")
        return v

    def state_counts(self, dims: int) -> List[int]:
        return [self.state_nodes] * dims if isinstance(self.state_nodes, int) else list(self.state_nodes)


class RandomLayout(BaseModel):
    """Seeded random obstacle placement"""
    count_min: int = Field(default=4, ge=0)
    count_max: int = Field(default=8, ge=0)
    radius_min: float = Field(default=0.1, gt=0)
    radius_max: float = Field(default=0.4, gt=0)
    x_range: List[float] = Field(default_factory=lambda: [-0.6, 0.6], min_length=2, max_length=2)
    y_range: List[float] = Field(default_factory=lambda: [-1.0, 1.0], min_length=2, max_length=2)
    start_x: float = -1.1
    goal_x: float = 1.1
    endpoint_y: List[float] = Field(default_factory=lambda: [-0.5, 0.5], min_length=2, max_length=2)


class WorldConfig(BaseModel):
    """Complete definition of one benchmark task"""
    id: str
    kind: WorldKind
    version: int = 1
    dims: int = Field(default=2, ge=1, description="State (and action) dimension")
    dt: float = Field(default=0.1, gt=0)
    x_max: float = Field(gt=0)
    state_bounds: Optional[List[List[float]]] = Field(
        default=None, description="Per-dimension [lower, upper] learning bounds; default [-x_max, x_max]"
    )
    u_max: float = Field(default=1.0, gt=0)
    margin: float = Field(default=0.0, ge=0, description="Collision margin used in learning and planning")
    obstacles: List[Obstacle] = Field(default_factory=list)
    layout: Optional[RandomLayout] = None
    visibility_range: float = Field(default=0.4, gt=0)
    min_start_goal_distance: float = Field(default=0.0, ge=0)
    costs: CostWeights = Field(default_factory=CostWeights)
    success: SuccessCriteria
    learn: LearnConfig
    controller: ControllerDefaults

    @model_validator(mode="after")
    def _check_bounds(self) -> "WorldConfig":
        if self.state_bounds is not None:
            if len(self.state_bounds) != self.dims:
                raise ValueError(f"state_bounds needs {self.dims} entries, got {len(self.state_bounds)}")
            for bound in self.state_bounds:
                if len(bound) != 2 or bound[0] >= bound[1]:
                    raise ValueError(f"invalid state bound {bound}")
        if isinstance(self.learn.state_nodes, list) and len(self.learn.state_nodes) != self.dims:
            raise ValueError(f"learn.state_nodes needs {self.dims} entries, got {len(self.learn.state_nodes)}")
        return self


class TrialSpec(BaseModel):
    """One randomized trial; shared by every method under comparison"""
    model_config = ConfigDict(frozen=True)

    seed: int
    start: List[float]
    goal: List[float]
    method: Method
    N: int = Field(gt=0)
    world_id: str
    obstacles: List[Obstacle] = Field(default_factory=list)
