"""
Pydantic schemas for the sampling-based controllers
"""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class Method(str, Enum):
    """Controllers that share the rollout / weight / update kernel"""
    MPPI = "mppi"
    PROJ_MPPI = "proj_mppi"
    TT_POE_MPPI = "tt_poe_mppi"


class ControllerConfig(BaseModel):
    """Hyperparameters of one controller instance"""
    model_config = ConfigDict(frozen=True)

    H: int = Field(gt=0, description="Horizon length in steps")
    N: int = Field(gt=0, description="Samples per control step")
    beta: float = Field(gt=0, description="Temperature of the importance weights")
    gamma: float = Field(default=1.0, gt=0, le=1, description="Mean update step size")
    dt: float = Field(gt=0, description="Integration step [s]")
    u_max: float = Field(gt=0, description="Per-dimension action bound [m/s]")
    sigma: float = Field(gt=0, description="Standard deviation of the action policy")
    method: Method = Method.MPPI


class ControllerDefaults(BaseModel):
    """Per-task controller settings as shipped in a world definition"""
    H: int = Field(gt=0)
    covariance: float = Field(gt=0, description="Diagonal of the task-space covariance")
    beta: float = Field(default=0.05, gt=0)
    gamma: float = Field(default=1.0, gt=0, le=1)
