from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent.parent


class Settings(BaseSettings):
    # Output root (DATASYNC_OUTPUT_ROOT overrides)
    output_root: Path = Field(default=BASE_DIR / "runs")
    log_level: str = Field(default="INFO")
    log_file: Optional[Path] = Field(default=None)

    # Data collection
    step: float = Field(default=1e-3, gt=0)
    hold_period: float = Field(default=0.37, gt=0)
    seed: int = Field(default=7)

    # LMI backend
    lmi_solver: str = Field(default="CLARABEL")
    lmi_fallback_solver: str = Field(default="SCS")
    lmi_min_margin: float = Field(default=1e-6, gt=0)
    lmi_margin_cap: float = Field(default=1.0, gt=0)
    lmi_variable_bound: float = Field(default=1e6, gt=0)
    # ||K|| <= lmi_gain_bound; the gain is then minimised at lmi_margin_keep * (max margin)
    lmi_gain_bound: float = Field(default=1e3, gt=0)
    lmi_margin_keep: float = Field(default=0.5, gt=0, le=1)
    lmi_equality_tol: float = Field(default=1e-7, gt=0)
    decay_rate: float = Field(default=0.5, ge=0)
    max_condition: float = Field(default=1e12, gt=1)

    # Closed-loop runs
    homogeneous_duration: float = Field(default=50.0, gt=0)
    heterogeneous_duration: float = Field(default=30.0, gt=0)

    model_config = SettingsConfigDict(
        env_prefix="DATASYNC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()
