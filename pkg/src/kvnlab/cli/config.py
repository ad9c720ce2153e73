"""Scenario configuration: YAML files validated against a strict schema.

A config names a scenario and overrides any subset of that scenario's
defaults.  Defaults and overrides are merged key by key, and the merged
tree is validated with unknown keys rejected.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigurationError

SCENARIOS = (
    "classical-ho", "classical-free", "classical-quartic", "quantum-ho", "quantum-free",
    "hybrid-obs", "hybrid-boost", "premeasure", "povm-extract", "kraus-extract", "algebra-check",
)


class UnknownScenarioError(ConfigurationError):
    def __init__(self, name):
        super().__init__(f"unknown scenario {name!r}; known scenarios: {', '.join(SCENARIOS)}")
        self.name = name


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AxisConfig(_Strict):
    n: int = Field(ge=4, le=4096)
    lo: float
    hi: float

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, v):
        if v & (v - 1):
            raise ValueError(f"grid size must be a power of two, got {v}")
        return v

    @model_validator(mode="after")
    def _ordered(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError(f"axis needs finite lo < hi, got [{self.lo}, {self.hi})")
        return self


class TimeConfig(_Strict):
    dt: float = Field(gt=0)
    T: float = Field(gt=0)
    save_every: int = Field(ge=1)

    @model_validator(mode="after")
    def _enough_steps(self):
        if self.T < self.dt:
            raise ValueError("T must cover at least one step")
        return self


class CouplingConfig(_Strict):
    c: float = 0.0
    kind: Literal["observable", "boost"] = "observable"

    @field_validator("c")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("coupling constant must be finite")
        return v


class InitialConfig(_Strict):
    """Gaussian initial data; quantum width via ``s`` (variance s^2/2)."""

    q: float = 0.0
    p: float = 0.0
    x: float = 0.0
    k: float = 0.0
    s: float = Field(1.0, gt=0)
    var_x: float = Field(0.5, gt=0)
    var_k: float = Field(0.5, gt=0)


class PartitionConfig(_Strict):
    """Either a half-plane split along ``axis`` or explicit rectangles."""

    axis: Literal["x", "k"] = "x"
    threshold: float = 0.0
    labels: tuple[str, str] = ("L", "R")
    cells: Optional[dict[str, list[tuple[float, float]]]] = None
    rest: Optional[str] = None


class PointerConfig(_Strict):
    kind: Literal["sign-of-q", "overlapping", "truncated"] = "sign-of-q"
    shift: float = Field(4.0, gt=0)
    variance: float = Field(0.25, gt=0)
    separation: float = Field(4.0, gt=0)
    dim: int = Field(2, ge=1, le=8)
    input: list[tuple[float, float]] = [(0.6, 0.0), (0.0, 0.8)]


class EnvironmentConfig(_Strict):
    dim: int = Field(1, ge=1, le=8)
    seed: int = 7


class OutputConfig(_Strict):
    dir: Optional[str] = None


class ScenarioConfig(_Strict):
    scenario: str
    grid: dict[Literal["q", "x", "k"], AxisConfig] = {}
    time: Optional[TimeConfig] = None
    coupling: CouplingConfig = CouplingConfig()
    initial: InitialConfig = InitialConfig()
    partition: PartitionConfig = PartitionConfig()
    pointer: PointerConfig = PointerConfig()
    environment: EnvironmentConfig = EnvironmentConfig()
    compare_uncoupled: bool = False
    output: OutputConfig = OutputConfig()
    seed: int = 0

    @field_validator("scenario")
    @classmethod
    def _known(cls, v):
        if v not in SCENARIOS:
            raise ValueError(f"unknown scenario {v!r}")
        return v

    def axis(self, label: str) -> AxisConfig:
        try:
            return self.grid[label]
        except KeyError:
            raise ConfigurationError(f"scenario {self.scenario} needs a grid for axis {label!r}") from None


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve(data: dict) -> ScenarioConfig:
    """Merge ``data`` over its scenario's defaults and validate.

    Raises UnknownScenarioError for an unknown name and pydantic's
    ValidationError for everything else.
    """
    from .scenarios import DEFAULTS

    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping")
    name = data.get("scenario")
    if name not in SCENARIOS:
        raise UnknownScenarioError(name)
    return ScenarioConfig.model_validate(deep_merge(DEFAULTS[name], data))


def load(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {path} is not valid YAML: {exc}") from None
    return resolve(data if data is not None else {})


def dump(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


__all__ = ["SCENARIOS", "UnknownScenarioError", "ScenarioConfig", "AxisConfig", "TimeConfig",
           "CouplingConfig", "InitialConfig", "PartitionConfig", "PointerConfig", "EnvironmentConfig",
           "OutputConfig", "deep_merge", "resolve", "load", "dump", "ValidationError"]
