"""Run configuration: one YAML file with nested sections.

Schema (every key optional; defaults shown by ``afc config --show``)::

    n_cfd: 1                 # concurrent environments
    n_marl: 1                # pseudo-environments per environment
    n_training_steps: 16
    seed: 0
    mode: in-process         # or "socket"
    env_kind: oscillator     # or "cylinder"
    action_bound: 1.0
    hidden: [512, 512]
    output_dir: runs/default
    worker_timeout: 600.0
    reward_window: 5.0       # final convective units averaged for the reward curve
    episode: {T_eps, n_actions}
    reward: {alpha, beta, gamma, C_d_baseline, C_l_baseline}
    ppo: {clip_eps, lr, epochs, minibatch, discount, gae_lambda,
          entropy_coef, value_coef, max_grad_norm}
    oscillator: {sigma, omega, kappa, b, noise_std, dt_int}
    cylinder: {x_range, y_range, resolution, Re, cfl, AoA, arc_width_deg,
               baseline_dir, perturbation, baseline_transient, baseline_window}
    evaluation: {duration, transient, seed}
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from afc.agent.ppo import PpoConfig
from afc.envs.base import EpisodeConfig
from afc.errors import ConfigError
from afc.reward import RewardConfig


@dataclass(frozen=True)
class OscillatorSection:
    sigma: float = 0.3
    omega: float = 1.5
    kappa: float = 0.05
    b: float = 1.0
    noise_std: float = 0.01
    dt_int: float = 0.05


@dataclass(frozen=True)
class CylinderSection:
    x_range: tuple = (-8.0, 20.0)
    y_range: tuple = (-15.0, 15.0)
    resolution: float = 16.0
    Re: float = 100.0
    cfl: float = 0.5
    AoA: float = 0.0
    arc_width_deg: float = 10.0
    baseline_dir: str = "baseline"
    perturbation: float = 1e-3
    baseline_transient: float = 100.0
    baseline_window: float = 100.0


@dataclass(frozen=True)
class EvaluationSection:
    duration: float = 60.0
    transient: float = 15.0
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    n_cfd: int = 1
    n_marl: int = 1
    n_training_steps: int = 16
    seed: int = 0
    mode: str = "in-process"
    env_kind: str = "oscillator"
    action_bound: float = 1.0
    hidden: tuple = (512, 512)
    output_dir: str = "runs/default"
    worker_timeout: float = 600.0
    reward_window: float = 5.0
    episode: EpisodeConfig = field(default_factory=lambda: EpisodeConfig(20.0, 40))
    reward: RewardConfig = field(default_factory=RewardConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    oscillator: OscillatorSection = field(default_factory=OscillatorSection)
    cylinder: CylinderSection = field(default_factory=CylinderSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)

    def __post_init__(self):
        if self.n_cfd < 1 or self.n_marl < 1:
            raise ConfigError("n_cfd and n_marl must be at least 1")
        if self.mode not in ("in-process", "socket"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.env_kind not in ("cylinder", "oscillator"):
            raise ConfigError(f"unknown env_kind {self.env_kind!r}")
        if self.env_kind == "cylinder" and self.n_marl != 1:
            raise ConfigError("the 2D cylinder environment supports n_marl = 1 only")
        if self.action_bound <= 0:
            raise ConfigError("action_bound must be positive")
        if self.n_training_steps < 0:
            raise ConfigError("n_training_steps must be non-negative")

    @property
    def trajectories_per_update(self):
        return self.n_cfd * self.n_marl

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return _to_plain(self)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data or {})


_NESTED = {
    "episode": EpisodeConfig,
    "reward": RewardConfig,
    "ppo": PpoConfig,
    "oscillator": OscillatorSection,
    "cylinder": CylinderSection,
    "evaluation": EvaluationSection,
}


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(x) for x in obj]
    return obj


def _build(cls, data):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for key, val in data.items():
        if cls is RunConfig and key in _NESTED:
            val = _build(_NESTED[key], val or {})
        elif isinstance(val, list):
            val = tuple(val)
        else:
            val = _as_default_type(names[key], val)
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _as_default_type(f, val):
    """Cast scalars to the type of the field default (YAML reads ``1e-4`` as text)."""
    default = f.default
    if default is dataclasses.MISSING or isinstance(default, bool) or isinstance(val, bool):
        return val
    try:
        if isinstance(default, float) and isinstance(val, (int, float, str)):
            return float(val)
        if isinstance(default, int) and isinstance(val, (int, float, str)):
            num = float(val)
            if num != int(num):
                raise ValueError
            return int(num)
    except ValueError:
        raise ConfigError(f"{f.name}: cannot use {val!r} as {type(default).__name__}") from None
    return val


def _coerce(text):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def apply_overrides(data: dict, overrides):
    """Apply ``section.key=value`` strings onto a plain config dict."""
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        parts = key.strip().split(".")
        target = data
        for p in parts[:-1]:
            target = target.setdefault(p, {})
        target[parts[-1]] = _coerce(raw)
    return data


def load_config(path=None, overrides=()) -> RunConfig:
    data = {}
    if path is not None:
        with Path(path).open() as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(apply_overrides(data, overrides))


def dump_config(cfg: RunConfig, path):
    with Path(path).open("w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
