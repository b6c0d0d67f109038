"""Configuration helpers for distal-lab runs."""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w


class ConfigError(RuntimeError):
    """Raised when settings or an experiment file cannot be loaded."""


class LabSettings(BaseModel):
    """Runtime configuration parsed from environment variables."""

    threads: int = Field(
        default=1,
        ge=1,
        alias="DISTAL_LAB_THREADS",
        validation_alias=AliasChoices("DISTAL_LAB_THREADS", "threads"),
    )
    log_level: str = Field(default="INFO", alias="DISTAL_LAB_LOG_LEVEL")
    output_dir: str = Field(default=".", alias="DISTAL_LAB_OUTPUT_DIR")

    model_config = ConfigDict(populate_by_name=True)


def load_settings(env_file: str | None = ".env") -> LabSettings:
    """Load and validate runtime settings, raising a helpful error on bad values."""

    if env_file and Path(env_file).exists():
        load_dotenv(env_file)

    try:
        settings = LabSettings.model_validate(os.environ)
    except ValidationError as exc:
        bad = [str(err["loc"][0]) for err in exc.errors()]
        raise ConfigError(
            f"Invalid runtime settings: {', '.join(bad)}. "
            "DISTAL_LAB_THREADS must be a positive integer."
        ) from exc

    return settings


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BoxSpec(_Section):
    """Half-open box [lo, hi) in product coordinates."""

    lo: List[float]
    hi: List[float]

    @model_validator(mode="after")
    def _check_shape(self) -> "BoxSpec":
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo and hi must have the same length")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent on every axis")
        return self


class ErgodicityParams(_Section):
    n: List[int] = Field(default_factory=lambda: [10_000])
    starts: int = Field(default=8, ge=1)
    base_modes: int = Field(default=4, ge=0)
    fiber_limit: int = Field(default=8, ge=1)
    threshold: float = Field(default=0.1, gt=0)
    expect: Literal["ergodic", "non-ergodic", "none"] = "none"

    @field_validator("n")
    @classmethod
    def _positive_lengths(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("orbit lengths must be >= 1")
        return value


class PerturbParams(_Section):
    """Parameters of the simple and the relative perturbation runs.

    In relative mode ``target``/``target2`` are the pair (g1, g2), ``k_group`` and
    ``subgroup`` describe K/H, ``gamma`` is the K-valued cocycle over the base and
    ``c_set`` boxes live in (z, kH, kk0H) coordinates.
    """

    mode: Literal["simple", "relative"] = "simple"
    target: str = "1/3"
    target2: Optional[str] = None
    a: float = Field(default=0.1, gt=0)
    b: float = Field(default=0.2, gt=0, lt=1)
    delta: float = Field(default=0.01, gt=0, lt=1)
    N: Optional[int] = Field(default=None, ge=1)
    seeds: int = Field(default=1, ge=1)
    c_set: Optional[List[BoxSpec]] = None
    k_group: str = "torus:1"
    subgroup: Optional[List[str]] = None
    gamma: str = "const:0.41421356237309503"
    fiber: Literal["point", "torus-identity", "torus-rotation"] = "point"
    k0_grid: int = Field(default=64, ge=1)
    samples: int = Field(default=2048, ge=16)
    del_constant: float = Field(default=10.0, gt=0)
    require: Literal["all", "any"] = "all"


class LemmaParams(_Section):
    trials: int = Field(default=10_000, ge=1)
    randomp_gamma: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.8])
    randomp_N: List[int] = Field(default_factory=lambda: [50, 200, 1000])
    randomp_variance: bool = True
    del_instances: int = Field(default=10_000, ge=0)
    del_cells: int = Field(default=12, ge=1)
    simple_p: List[float] = Field(default_factory=lambda: [0.3, 0.5])
    simple_L: List[int] = Field(default_factory=lambda: [0, 1, 4])
    simple_n: List[int] = Field(default_factory=lambda: [500, 2000])
    simple_dependence: List[Literal["copies", "anti"]] = Field(default_factory=lambda: ["copies"])
    simple_p_actual: List[float] = Field(default_factory=list)

    @field_validator("randomp_gamma")
    @classmethod
    def _gamma_range(cls, value: List[float]) -> List[float]:
        if any(not 0 < g < 1 for g in value):
            raise ValueError("gamma values must lie in (0, 1)")
        return value

    @field_validator("simple_p")
    @classmethod
    def _p_range(cls, value: List[float]) -> List[float]:
        if any(not 0 < p <= 1 for p in value):
            raise ValueError("p values must lie in (0, 1]")
        return value


class TowerParams(_Section):
    height: int = Field(default=5, ge=1)
    eps: float = Field(default=0.5, gt=0, le=1)
    interval: Optional[float] = Field(default=None, gt=0, lt=1)
    dump: bool = False


class ExperimentConfig(_Section):
    """One experiment per file; the section named by ``kind`` carries its parameters."""

    kind: Literal["ergodicity", "perturb", "lemmas", "tower"]
    seed: int = Field(default=0, ge=0)
    output: str = "report.csv"
    system: str = "rotation:golden"
    group: str = "torus:1"
    cocycle: str = "const:0"
    ergodicity: Optional[ErgodicityParams] = None
    perturb: Optional[PerturbParams] = None
    lemmas: Optional[LemmaParams] = None
    tower: Optional[TowerParams] = None

    @model_validator(mode="after")
    def _fill_section(self) -> "ExperimentConfig":
        defaults = {
            "ergodicity": ErgodicityParams,
            "perturb": PerturbParams,
            "lemmas": LemmaParams,
            "tower": TowerParams,
        }
        if getattr(self, self.kind) is None:
            setattr(self, self.kind, defaults[self.kind]())
        return self


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            parts.append(f"unknown key '{key}'")
        else:
            parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def parse_experiment_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_describe(exc)}") from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_experiment_config(data, source=str(path))


def dump_experiment_config(config: ExperimentConfig, path: str | Path) -> None:
    with Path(path).open("wb") as fh:
        tomli_w.dump(config.model_dump(exclude_none=True), fh)
