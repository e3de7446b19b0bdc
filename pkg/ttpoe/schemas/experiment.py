"""
Pydantic schemas for experiment configuration and results
"""
from typing import Dict, List, Optional, Any

from pydantic import BaseModel, Field, field_validator

from ttpoe.schemas.controller import Method


class ExperimentConfig(BaseModel):
    """Schema for an experiment: methods x sample counts x paired trials"""
    world: str
    methods: List[Method] = Field(default_factory=lambda: [Method.MPPI, Method.PROJ_MPPI, Method.TT_POE_MPPI])
    samples: List[int] = Field(default_factory=lambda: [16, 64, 512])
    trials: int = Field(default=100, ge=1)
    seed: int = 0
    controller: Dict[str, Any] = Field(default_factory=dict, description="Overrides of controller fields")
    model: Optional[str] = None
    out: str = "results"
    workers: int = Field(default=1, ge=1)

    @field_validator("samples")
    @classmethod
    def _positive_samples(cls, value: List[int]) -> List[int]:
        if not value or any(n <= 0 for n in value):
            raise ValueError("sample counts must be positive")
        return value

    @field_validator("methods")
    @classmethod
    def _non_empty_methods(cls, value: List[Method]) -> List[Method]:
        if not value:
            raise ValueError("at least one method is required")
        return value


class TrialResult(BaseModel):
    """Outcome of one closed-loop trial"""
    world: str
    method: Method
    samples: int
    trial: int
    seed: int
    success: bool
    steps: int = Field(ge=0)
    total_cost: float = Field(ge=0)
    violation_fraction: float = Field(default=0.0, ge=0, le=1)
    degenerate_steps: int = Field(default=0, ge=0)
    step_time: float = Field(default=0.0, ge=0, description="Mean wall time per control step [s]")
    rebuilds: int = Field(default=0, ge=0)
    rebuild_time: float = Field(default=0.0, ge=0, description="Mean wall time per model rebuild [s]")


class NormalizedMetrics(BaseModel):
    """Method metrics normalized to the MPPI baseline on paired trials"""
    success_rate: float
    baseline_success_rate: float
    pairs: int
    mean_log_steps: Optional[float] = None
    mean_log_cost: Optional[float] = None


class SummaryRow(BaseModel):
    """One (method, samples) cell of the result table"""
    world: str
    method: Method
    samples: int
    trials: int
    success_rate: float
    pairs: int
    mean_log_steps: Optional[float] = None
    mean_log_cost: Optional[float] = None
    violation_fraction: float = 0.0
