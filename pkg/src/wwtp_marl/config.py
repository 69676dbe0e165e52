"""Run configuration: one TOML document with sections mirroring the module types."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, is_dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .impacts import RAW_WEIGHTS, CostFactors, EmissionFactors, RewardConfig, STANDARDS
from .influent import InfluentConfig
from .marl.maddpg import TrainConfig
from .plant import PlantParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RewardSettings:
    """Scenario-independent reward terms; mode and standard come from the scenario."""
    raw_weights: Mapping[str, float] = field(default_factory=lambda: dict(RAW_WEIGHTS))
    violation_penalty: float = 1.0
    lambda_smooth: float = 0.1
    lambda_mag: float = 0.05

    def __post_init__(self):
        if set(self.raw_weights) != set(RAW_WEIGHTS):
            raise ConfigError(f"raw_weights needs exactly {sorted(RAW_WEIGHTS)}")
        if min(self.raw_weights.values()) < 0 or sum(self.raw_weights.values()) <= 0:
            raise ConfigError("raw_weights must be non-negative with a positive sum")

    def weights(self) -> dict[str, float]:
        total = sum(self.raw_weights.values())
        return {k: v / total for k, v in self.raw_weights.items()}

    def reward_config(self, mode: str, standard: str, **overrides) -> RewardConfig:
        if standard not in STANDARDS:
            raise ConfigError(f"unknown discharge standard {standard!r}")
        kw = dict(mode=mode, standard=STANDARDS[standard], weights=self.weights(),
                  violation_penalty=self.violation_penalty, lambda_smooth=self.lambda_smooth,
                  lambda_mag=self.lambda_mag)
        kw.update(overrides)
        return RewardConfig(**kw)


@dataclass(frozen=True)
class ExperimentSettings:
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    warmup_days: float = 20.0
    horizon_days: float = 10.0
    control_interval_h: float = 1.0
    bounds_samples: int = 10_000
    bounds_seed: int = 0

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.warmup_days < 0 or self.horizon_days <= 0 or self.control_interval_h <= 0:
            raise ConfigError("warm-up must be >= 0; horizon and interval must be positive")
        if self.bounds_samples < 2:
            raise ConfigError("bounds_samples must be >= 2")

    @property
    def dt(self) -> float:
        return self.control_interval_h / 24.0

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon_days / self.dt))


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    influent: InfluentConfig = field(default_factory=InfluentConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    emission: EmissionFactors = field(default_factory=EmissionFactors)
    costs: CostFactors = field(default_factory=CostFactors)
    reward: RewardSettings = field(default_factory=RewardSettings)
    train: TrainConfig = field(default_factory=TrainConfig)


def _build(cls, table: Mapping[str, Any], where: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(table) - set(known)
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {', '.join(sorted(unknown))}")
    kw = {}
    defaults = cls()
    for name, value in table.items():
        current = getattr(defaults, name)
        if is_dataclass(current):
            if not isinstance(value, Mapping):
                raise ConfigError(f"[{where}.{name}] must be a table")
            kw[name] = _build(type(current), value, f"{where}.{name}")
        elif isinstance(current, tuple):
            kw[name] = tuple(value)
        elif isinstance(current, Mapping):
            kw[name] = dict(value)
        elif isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
            kw[name] = float(value)
        else:
            kw[name] = value
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from exc


def from_dict(doc: Mapping[str, Any]) -> RunConfig:
    return _build(RunConfig, doc, "root")


def default_toml_text() -> str:
    return resources.files("wwtp_marl").joinpath("defaults.toml").read_text()


def load_config(path: str | Path | None = None) -> RunConfig:
    """Packaged defaults, overlaid with ``path`` if given (table-wise merge)."""
    doc = tomllib.loads(default_toml_text())
    if path is not None:
        try:
            user = tomllib.loads(Path(path).read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        doc = _merge(doc, user)
    return from_dict(doc)


def _merge(base: dict, over: Mapping) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, train=replace(cfg.train, seed=seed))
