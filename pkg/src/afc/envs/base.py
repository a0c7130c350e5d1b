"""Environment interface shared by the cylinder and oscillator-lattice environments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from afc.errors import ActionRangeError, ConfigError, LifecycleError


@dataclass(frozen=True)
class EpisodeConfig:
    T_eps: float = 10.52
    n_actions: int = 120

    def __post_init__(self):
        if self.n_actions < 1:
            raise ConfigError("n_actions must be at least 1")
        if not self.T_eps > 0:
            raise ConfigError("T_eps must be positive")

    @property
    def T_act(self):
        return self.T_eps / self.n_actions


@dataclass
class ForceRecord:
    """Force coefficients of one pseudo-environment over one action period."""

    t: np.ndarray
    C_l: np.ndarray
    C_d: np.ndarray

    def window_means(self):
        return float(np.mean(self.C_l)), float(np.mean(self.C_d))


@dataclass
class Observation:
    values: np.ndarray
    sensors_per_slice: int
    n_slices: int

    def __post_init__(self):
        if self.values.size != self.sensors_per_slice * self.n_slices:
            raise ConfigError(
                f"observation has {self.values.size} values, expected "
                f"{self.sensors_per_slice} x {self.n_slices}"
            )


def partition_observation(global_sensors, marl_id, n_slices=3):
    """Concatenate the slices of ``marl_id`` and its neighbours (periodic), left to right.

    ``global_sensors`` has one row per pseudo-environment.
    """
    g = np.asarray(global_sensors, dtype=float)
    n = g.shape[0]
    half = n_slices // 2
    idx = [(marl_id + k) % n for k in range(-half, n_slices - half)]
    return np.concatenate([g[i] for i in idx])


def action_ramp(previous, target, t_local, ramp_time):
    """Linear ramp from ``previous`` to ``target`` over ``ramp_time``, then hold."""
    if ramp_time <= 0:
        return np.asarray(target, dtype=float)
    w = min(1.0, t_local / ramp_time)
    return (1.0 - w) * np.asarray(previous, dtype=float) + w * np.asarray(target, dtype=float)


class Environment:
    """Episode bookkeeping common to all environments.

    Subclasses implement ``_reset_state(seed)``, ``_sensors()`` (one row per
    pseudo-environment) and ``_advance(actions, period)`` returning one
    ForceRecord per pseudo-environment.
    """

    n_slices = 3
    ramp_fraction = 0.2

    def __init__(self, episode: EpisodeConfig, n_marl: int, sensors_per_slice: int, action_bound: float):
        if n_marl < 1:
            raise ConfigError("n_marl must be at least 1")
        self.episode = episode
        self.n_marl = n_marl
        self.sensors_per_slice = sensors_per_slice
        self.action_bound = float(action_bound)
        self.steps_taken = 0
        self._ready = False
        self.current_actions = np.zeros(n_marl)

    @property
    def obs_size(self):
        return self.sensors_per_slice * self.n_slices

    @property
    def done(self):
        return self.steps_taken >= self.episode.n_actions

    def observations(self):
        sensors = self._sensors()
        return [partition_observation(sensors, m, self.n_slices) for m in range(self.n_marl)]

    def reset(self, seed):
        self._reset_state(seed)
        self.steps_taken = 0
        self.current_actions = np.zeros(self.n_marl)
        self._ready = True
        return self.observations()

    def step_action(self, actions):
        if not self._ready:
            raise LifecycleError("step_action called before reset")
        if self.done:
            raise LifecycleError(f"episode finished after {self.episode.n_actions} actions; call reset")
        actions = np.asarray(actions, dtype=float).reshape(-1)
        if actions.size != self.n_marl:
            raise ConfigError(f"expected {self.n_marl} actions, got {actions.size}")
        if not np.all(np.isfinite(actions)) or np.any(np.abs(actions) > self.action_bound):
            raise ActionRangeError(f"actions {actions} outside [-{self.action_bound}, {self.action_bound}]")
        records = self._advance(actions, self.episode.T_act)
        self.current_actions = actions.copy()
        self.steps_taken += 1
        return self.observations(), records, self.done

    # subclass hooks
    def _reset_state(self, seed):
        raise NotImplementedError

    def _sensors(self):
        raise NotImplementedError

    def _advance(self, actions, period):
        raise NotImplementedError

    @staticmethod
    def substep_count(period, dt_max):
        n = max(1, math.ceil(period / dt_max - 1e-9))
        return n, period / n
