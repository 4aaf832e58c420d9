"""Run configuration: JSON file, environment defaults, command-line overrides"""
import json
import os
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from core.classifier import MODEL_KINDS, TRADITIONAL_KINDS, ModelHyperparameters
from processors import PIPELINES
from processors.asr_processor import ASR_PROVIDERS
from processors.augmenter import AugmentConfig
from processors.denoiser import DenoiseConfig
from processors.spectral_processor import SpectralConfig, normalize_variant
from .errors import ConfigError

DEFAULT_SEED = 42


def env_seed() -> int:
    raw = os.getenv('RADIOCLASS_SEED')
    if raw is None or raw == '':
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"RADIOCLASS_SEED must be an integer, got '{raw}'")


class RunConfig(BaseModel):
    """Everything one CLI invocation needs"""

    corpus_dir: Optional[str] = None
    out_dir: str = 'runs'
    pipelines: List[str] = Field(default_factory=lambda: list(PIPELINES))
    models: List[str] = Field(default_factory=lambda: list(TRADITIONAL_KINDS))
    variant: str = 'mel'
    traditional_features: str = 'pooled'
    seed: int = Field(default_factory=env_seed, ge=0)
    repeats: int = Field(1, ge=1)
    train_frac: float = Field(0.8, gt=0.0, lt=1.0)
    test_noise: float = Field(0.0, ge=0.0)
    strict: bool = False
    asr_provider: str = 'sidecar'
    asr_endpoint: Optional[str] = Field(default_factory=lambda: os.getenv('RADIOCLASS_ASR_ENDPOINT') or None)
    asr_timeout_ms: int = Field(10000, gt=0)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    denoise: DenoiseConfig = Field(default_factory=DenoiseConfig)
    hyper: ModelHyperparameters = Field(default_factory=ModelHyperparameters)

    @field_validator('pipelines')
    @classmethod
    def _pipelines(cls, value: List[str]) -> List[str]:
        bad = [p for p in value if p not in PIPELINES]
        if bad or not value:
            raise ValueError(f"pipelines must be a non-empty subset of {list(PIPELINES)}")
        return list(dict.fromkeys(value))

    @field_validator('models')
    @classmethod
    def _models(cls, value: List[str]) -> List[str]:
        bad = [m for m in value if m not in MODEL_KINDS]
        if bad or not value:
            raise ValueError(f"models must be a non-empty subset of {list(MODEL_KINDS)}")
        return list(dict.fromkeys(value))

    @field_validator('variant')
    @classmethod
    def _variant(cls, value: str) -> str:
        return normalize_variant(value)

    @field_validator('asr_provider')
    @classmethod
    def _provider(cls, value: str) -> str:
        if value not in ASR_PROVIDERS:
            raise ValueError(f"asr_provider must be one of {list(ASR_PROVIDERS)}")
        return value

    @property
    def spectral(self) -> SpectralConfig:
        return SpectralConfig(variant=self.variant, traditional_features=self.traditional_features)


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            base_value = merged.get(key)
            nested = _merge(base_value if isinstance(base_value, dict) else {}, value)
            if nested:
                merged[key] = nested
        else:
            merged[key] = value
    return merged


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from an optional JSON file and flag overrides

    Flags win over the file; None-valued overrides are ignored so unset
    flags keep the file (or default) value.

    Args:
        path: JSON config file
        overrides: Nested dictionary of explicitly given flags

    Returns:
        Validated RunConfig
    """
    data: Dict[str, Any] = {}
    if path:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        except ValueError as e:
            raise ConfigError(f"Config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must contain a JSON object")
    data = _merge(data, overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
