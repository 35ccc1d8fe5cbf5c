import logging
from typing import Any, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from fput.lattice import LatticeParams

logger = logging.getLogger(__name__)

InitKind = Literal["thermal", "out-of-equilibrium"]

DEFAULT_BETA_N = [1.0, 0.5, 0.1, 0.05, 0.01]
DESK_N_GRID = [200, 500]
FULL_N_GRID = [200, 500, 800, 1000]


class IntegratorConfig(BaseModel):
    h: float = Field(default=0.01, gt=0, allow_inf_nan=False)
    n_substeps_per_sample: int = Field(default=100, ge=1)  # diagnostic cadence
    scheme: Literal["yoshida6"] = "yoshida6"


class ExperimentConfig(BaseModel):
    N: List[int] = Field(default_factory=lambda: list(DESK_N_GRID))
    kappa: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    m: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    betaN_values: List[float] = Field(default_factory=lambda: list(DEFAULT_BETA_N))
    init: List[InitKind] = Field(default_factory=lambda: ["thermal", "out-of-equilibrium"])
    h: float = Field(default=0.01, gt=0, allow_inf_nan=False)
    t_max_in_Tf: float = Field(default=10.0, gt=0, allow_inf_nan=False)
    window_in_Tf: Tuple[float, float] = (5.0, 10.0)
    n_ensembles: int = Field(default=5, ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    sample_cadence: int = Field(default=100, ge=1)

    @field_validator("N", "init", mode="before")
    @classmethod
    def _scalar_to_list(cls, value: Any) -> Any:
        if isinstance(value, (int, str)):
            return [value]
        return value

    @field_validator("N")
    @classmethod
    def _chain_sizes(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one chain size N is required")
        if any(n < 4 for n in value):
            raise ValueError(f"chain sizes must be >= 4, got {value}")
        return value

    @field_validator("betaN_values")
    @classmethod
    def _positive_betas(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("betaN_values must not be empty")
        if any(not (b > 0 and b < float("inf")) for b in value):
            raise ValueError(f"betaN_values must be positive and finite, got {value}")
        return value

    @model_validator(mode="after")
    def _window_inside_run(self) -> "ExperimentConfig":
        start, end = self.window_in_Tf
        if not 0 <= start < end <= self.t_max_in_Tf:
            raise ValueError(
                f"averaging window {self.window_in_Tf} must lie inside [0, {self.t_max_in_Tf}]"
            )
        return self

    def lattice(self, N: int, betaN: float) -> LatticeParams:
        return LatticeParams.from_beta_n(N, betaN, kappa=self.kappa, m=self.m)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(h=self.h, n_substeps_per_sample=self.sample_cadence)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Return a re-validated copy; None values leave the field unchanged"""
        update = {key: value for key, value in overrides.items() if value is not None}
        return ExperimentConfig.model_validate({**self.model_dump(), **update})

    @classmethod
    def load_from_yaml(cls, path: str) -> "ExperimentConfig":
        with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
        return cls(**data)


class RuntimeSettings(BaseSettings):
    """Process settings read from FPUT_* environment variables"""
    model_config = SettingsConfigDict(env_prefix="FPUT_")

    config_path: Optional[str] = None
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
