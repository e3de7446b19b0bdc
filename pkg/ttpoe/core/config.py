"""
Application configuration using pydantic-settings
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Project
    PROJECT_NAME: str = "TT-PoE-MPC"
    VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"

    # Filesystem
    OUTPUT_DIR: str = "results"
    MODEL_DIR: str = "models"
    WORLDS_DIR: str = ""  # empty -> packaged ttpoe/data/worlds

    # Tensor construction
    MAX_DENSE_ENTRIES: int = 50_000_000
    CONTRACTION_CHUNK_ENTRIES: int = 2_000_000
    MAX_PREFIX_TABLE_ENTRIES: int = 20_000_000

    # Proj-MPPI line search
    PROJ_BISECTION_TOL: float = 1e-4
    PROJ_BISECTION_MAX_ITER: int = 30

    # Tasks
    GOAL_TOLERANCE: float = 0.05

    # Experiments
    DEFAULT_MASTER_SEED: int = 0
    WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )


# Global settings instance
settings = Settings()
