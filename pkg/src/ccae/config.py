"""Experiment configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment, dotted keys address nested
sections::

    scenario.num_users = 2048
    scenario.trajectory.step_length = 10.0
    channel.mode = nlos
    constraints.recipes = plain, fad, fad_mrd
"""
from __future__ import annotations

import dataclasses
import hashlib
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ArrayGeometry, ChannelConfig
from .nn import TrainConfig
from .scenario import ScenarioConfig

RECIPES = ("plain", "fad", "fad_mrd")
REFERENCES = ("true-positions", "feature-space")


class ConfigError(ValueError):
    pass


@dataclass
class FeatureConfig:
    scaling_mode: str = "unit_norm"


@dataclass
class NetworkConfig:
    hidden: tuple[int, ...] = (500, 100, 50, 20)
    code_dim: int = 2
    activation: str = "relu"
    seed: int = 0


@dataclass
class ConstraintConfig:
    recipes: tuple[str, ...] = RECIPES
    # None: trajectory step length
    d_max: float | None = None
    lag_max: int = 1
    anchor_weight: float = 1.0
    trajectory_weight: float = 1.0
    # representation units: (xy - origin) / scale; None derives both from the area
    chart_origin_x: float | None = None
    chart_origin_y: float | None = None
    chart_scale: float | None = None


@dataclass
class MetricsConfig:
    # None: 1, ceil(2.5% N), ceil(5% N)
    ks: tuple[int, ...] | None = None
    reference: str = "true-positions"


def _default_train() -> TrainConfig:
    return TrainConfig(lambda_fad=10.0, lambda_mrd=10.0)


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    array: ArrayGeometry = field(default_factory=ArrayGeometry)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=_default_train)
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> None:
        self.scenario.validate()
        self.array.validate()
        self.channel.validate()
        self.train.validate()
        if self.features.scaling_mode not in ("unit_norm", "standardize"):
            raise ConfigError(f"unknown scaling mode {self.features.scaling_mode!r}")
        for recipe in self.constraints.recipes:
            if recipe not in RECIPES:
                raise ConfigError(f"unknown recipe {recipe!r}")
        if self.metrics.reference not in REFERENCES:
            raise ConfigError(f"unknown metrics reference {self.metrics.reference!r}")
        if self.constraints.d_max is not None and self.constraints.d_max <= 0:
            raise ConfigError("constraints.d_max must be positive")
        if self.constraints.lag_max < 1:
            raise ConfigError("constraints.lag_max must be >= 1")
        if self.constraints.chart_scale is not None and self.constraints.chart_scale <= 0:
            raise ConfigError("constraints.chart_scale must be positive")
        needs_traj = "fad_mrd" in self.constraints.recipes
        if needs_traj and self.scenario.trajectory.num_points < 2:
            raise ConfigError("recipe fad_mrd needs a trajectory with at least two points")

    @property
    def chart_origin(self) -> tuple[float, float]:
        s, c = self.scenario, self.constraints
        ox = 0.5 * (s.area_x_min + s.area_x_max) if c.chart_origin_x is None else c.chart_origin_x
        oy = 0.5 * (s.area_y_min + s.area_y_max) if c.chart_origin_y is None else c.chart_origin_y
        return ox, oy

    @property
    def chart_scale(self) -> float:
        s = self.scenario
        if self.constraints.chart_scale is not None:
            return self.constraints.chart_scale
        return 0.5 * max(s.area_x_max - s.area_x_min, s.area_y_max - s.area_y_min)

    @property
    def d_max(self) -> float:
        if self.constraints.d_max is not None:
            return self.constraints.d_max
        return self.scenario.trajectory.step_length


def _convert(text: str, hint):
    text = text.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if text.lower() in ("none", ""):
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(text, inner[0])
    if origin in (tuple, list):
        items = [t for t in text.replace(",", " ").split()]
        return tuple(_convert(t, args[0]) for t in items)
    if hint is bool:
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    if hint is str:
        return text
    raise ConfigError(f"unsupported setting type {hint}")


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _set(obj, path: list[str], text: str, key: str) -> None:
    name = path[0]
    names = {f.name for f in dataclasses.fields(obj)}
    if name not in names:
        raise ConfigError(f"unknown setting {key!r}")
    current = getattr(obj, name)
    if dataclasses.is_dataclass(current):
        if len(path) == 1:
            raise ConfigError(f"{key!r} is a section, not a setting")
        _set(current, path[1:], text, key)
        return
    if len(path) != 1:
        raise ConfigError(f"unknown setting {key!r}")
    hint = typing.get_type_hints(type(obj))[name]
    try:
        setattr(obj, name, _convert(text, hint))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from None


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    config = base if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        _set(config, key.split("."), value, key)
    config.validate()
    return config


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(config, prefix: str = "") -> str:
    """Every setting, in declaration order; parses back to an equal config."""
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if dataclasses.is_dataclass(value):
            lines.append(dump_config(value, f"{prefix}{f.name}."))
        else:
            lines.append(f"{prefix}{f.name} = {_format(value)}")
    return "\n".join(lines)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]
