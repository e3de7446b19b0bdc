"""
Pydantic schema for one axis of a rectangular discretization
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator


class GridDim(BaseModel):
    """Uniformly spaced nodes covering [lower, upper], both bounds included"""
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    nodes: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_bounds(self) -> "GridDim":
        if not self.lower < self.upper:
            raise ValueError(f"lower bound {self.lower} must be below upper bound {self.upper}")
        return self

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.nodes - 1)
