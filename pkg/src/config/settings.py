"""
Configuration management with Pydantic validation.

Two layers: ``RunConfig`` mirrors the run configuration file (kernels,
registration and optimizer parameters), and ``RuntimeSettings`` carries
process-level knobs read from ``VARIMATCH_*`` environment variables.
"""

import json
from pathlib import Path
from typing import Any, Literal

import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.geometry.kernels import (
    DeformationKernel,
    GrassmannKernel,
    GrassmannKind,
    KernelConfig,
    SpatialKernel,
)
from src.models.box import Box
from src.models.errors import SchemaError

DEFAULT_CONFIG_PATH = Path(__file__).parent / "default_config.yaml"


class LbfgsConfig(BaseModel):
    """Limited-memory BFGS settings."""

    model_config = ConfigDict(frozen=True)

    memory: int = Field(default=10, ge=1)
    max_iters: int = Field(default=500, ge=1)
    grad_tol: float = Field(default=1e-8, gt=0)
    c1: float = Field(default=1e-4, gt=0, lt=1)
    c2: float = Field(default=0.9, gt=0, lt=1)
    projection: Box | None = None

    @field_validator("c2")
    @classmethod
    def validate_wolfe(cls, v: float, info: Any) -> float:
        c1 = info.data.get("c1", 1e-4)
        if v <= c1:
            raise ValueError("Wolfe constants must satisfy c1 < c2")
        return v


class GammaSettings(BaseModel):
    """Grassmann kernel section of the run configuration."""

    model_config = ConfigDict(extra="forbid")

    kind: GrassmannKind = GrassmannKind.ORIENTED_GAUSSIAN
    sigma_g: float | None = Field(default=None, gt=0)


class OptimizerSettings(BaseModel):
    """Optimizer section of the run configuration."""

    model_config = ConfigDict(extra="forbid")

    memory: int = Field(default=10, ge=1)
    max_iters: int = Field(default=500, ge=1)
    grad_tol: float = Field(default=1e-8, gt=0)
    c1: float = Field(default=1e-4, gt=0, lt=1)
    c2: float = Field(default=0.9, gt=0, lt=1)


class RegistrationConfig(BaseModel):
    """Parameters of one geodesic-shooting registration."""

    model_config = ConfigDict(frozen=True)

    lambda_: float = Field(default=10.0, gt=0)
    steps: int = Field(default=16, ge=1)
    kernels: KernelConfig = Field(default_factory=KernelConfig)
    optimizer: LbfgsConfig = Field(default_factory=LbfgsConfig)
    reduce_momentum: bool = True
    seed: int = 0


class QuantizeConfig(BaseModel):
    """Parameters of a quantization run."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    N: int = Field(..., ge=1)
    restarts: int = Field(default=5, ge=1)
    box: Box | Literal["auto"] | None = None
    seed: int = 0
    jitter: float = Field(default=1e-3, ge=0)
    optimizer: LbfgsConfig = Field(default_factory=LbfgsConfig)


class RunConfig(BaseModel):
    """Run configuration file (JSON or YAML)."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    sigma_rho: float = Field(default=1.0, gt=0)
    gamma: GammaSettings = Field(default_factory=GammaSettings)
    sigma_v: float = Field(default=1.0, gt=0)
    lambda_: float = Field(default=10.0, gt=0, alias="lambda")
    steps: int = Field(default=16, ge=1)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    reduce_momentum: bool = True
    seed: int = 0

    def kernels(self) -> KernelConfig:
        grassmann = GrassmannKernel(kind=self.gamma.kind)
        if self.gamma.sigma_g is not None:
            grassmann = GrassmannKernel(kind=self.gamma.kind, sigma_g=self.gamma.sigma_g)
        return KernelConfig(
            spatial=SpatialKernel(sigma_rho=self.sigma_rho),
            grassmann=grassmann,
            deformation=DeformationKernel(sigma_v=self.sigma_v),
        )

    def lbfgs(self, projection: Box | None = None) -> LbfgsConfig:
        return LbfgsConfig(**self.optimizer.model_dump(), projection=projection)

    def registration(self) -> RegistrationConfig:
        return RegistrationConfig(
            lambda_=self.lambda_,
            steps=self.steps,
            kernels=self.kernels(),
            optimizer=self.lbfgs(),
            reduce_momentum=self.reduce_momentum,
            seed=self.seed,
        )

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


class RuntimeSettings(BaseSettings):
    """Process-level settings."""

    model_config = SettingsConfigDict(
        env_prefix="VARIMATCH_",
        case_sensitive=False,
    )

    threads: int | None = Field(default=None, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "WARNING"
    log_file: Path | None = None


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _load_mapping(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in {".yaml", ".yml"}:
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise SchemaError(f"Config file {path} is not valid: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise SchemaError(f"Config file {path} must contain a mapping")
    return data


def read_config(config_path: Path | None = None) -> RunConfig:
    """Load a run configuration, filling missing keys from the packaged defaults.

    Raises:
        SchemaError: If a key is unknown or a value fails validation (the error
            names the offending key path)
    """
    data = _load_mapping(DEFAULT_CONFIG_PATH)
    if config_path is not None:
        data = _deep_merge(data, _load_mapping(Path(config_path)))
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise SchemaError(f"Invalid config value for '{key}': {first['msg']}", key=key) from e


# Global settings instance
_settings: RuntimeSettings | None = None


def get_settings() -> RuntimeSettings:
    """Get or create global runtime settings."""
    global _settings
    if _settings is None:
        _settings = RuntimeSettings()
    return _settings


def reload_settings(**overrides: Any) -> RuntimeSettings:
    """Rebuild runtime settings from the environment plus explicit overrides."""
    global _settings
    _settings = RuntimeSettings(**{k: v for k, v in overrides.items() if v is not None})
    return _settings
