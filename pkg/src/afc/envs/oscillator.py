"""Ring of coupled Stuart-Landau oscillators as a cheap multi-agent testbed.

Each oscillator plays the role of one spanwise segment: its limit cycle
stands in for vortex shedding, ``Re(A)`` for lift and ``|A|^2`` for drag.
The ring is translation invariant, like a spanwise-periodic flow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afc.envs.base import EpisodeConfig, Environment, ForceRecord, action_ramp
from afc.errors import ConfigError, DivergenceError
from afc.reward import BaselineStats


@dataclass(frozen=True)
class OscillatorLatticeConfig:
    n_osc: int = 3
    sigma: float = 0.3
    omega: float = 1.5
    kappa: float = 0.05
    b: float = 1.0
    noise_std: float = 0.01
    dt_int: float = 0.05

    def __post_init__(self):
        if self.n_osc < 1:
            raise ConfigError("n_osc must be at least 1")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive for a limit cycle to exist")
        if self.dt_int <= 0:
            raise ConfigError("dt_int must be positive")


def _rhs(a, forcing, cfg):
    coupling = np.roll(a, -1) + np.roll(a, 1) - 2 * a
    return (cfg.sigma + 1j * cfg.omega) * a - np.abs(a) ** 2 * a + cfg.kappa * coupling + forcing


def oscillator_step(state, actions, cfg: OscillatorLatticeConfig, dt):
    """Advance the complex amplitudes by ``dt`` with classical RK4 (actions held fixed)."""
    if dt > cfg.dt_int * (1 + 1e-12):
        raise ConfigError(f"dt {dt} exceeds the integration cap {cfg.dt_int}")
    a = np.asarray(state, dtype=complex)
    f = cfg.b * np.asarray(actions, dtype=float)
    k1 = _rhs(a, f, cfg)
    k2 = _rhs(a + 0.5 * dt * k1, f, cfg)
    k3 = _rhs(a + 0.5 * dt * k2, f, cfg)
    k4 = _rhs(a + dt * k3, f, cfg)
    out = a + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(-1, "oscillator state")
    return out


def pseudo_coefficients(state):
    """(C_l, C_d) per oscillator: real part and squared modulus."""
    return state.real.copy(), np.abs(state) ** 2


class OscillatorEnv(Environment):
    sensors = ("Re A", "Im A")

    def __init__(self, cfg: OscillatorLatticeConfig = OscillatorLatticeConfig(),
                 episode: EpisodeConfig = EpisodeConfig(T_eps=20.0, n_actions=40),
                 action_bound=1.0, spinup=100.0):
        super().__init__(episode, cfg.n_osc, len(self.sensors), action_bound)
        self.cfg = cfg
        self.time = 0.0
        self.rng = np.random.default_rng(0)
        # the episode-start state: the unactuated limit cycle reached from a fixed start
        a = np.full(cfg.n_osc, 0.1 + 0.0j)
        a = self._integrate_free(a, spinup, np.random.default_rng(12345))
        self.initial_state = a
        self.state = a.copy()

    def _integrate_free(self, a, duration, rng, record=None):
        n, dt = self.substep_count(duration, self.cfg.dt_int)
        zero = np.zeros(self.cfg.n_osc)
        t = 0.0
        for _ in range(n):
            a = self._noisy_step(a, zero, dt, rng)
            t += dt
            if record is not None:
                record.append((t, a.copy()))
        return a

    def _noisy_step(self, a, actions, dt, rng):
        a = oscillator_step(a, actions, self.cfg, dt)
        if self.cfg.noise_std > 0:
            z = rng.standard_normal(2 * self.cfg.n_osc)
            a = a + self.cfg.noise_std * np.sqrt(dt) * (z[: self.cfg.n_osc] + 1j * z[self.cfg.n_osc:])
        return a

    def baseline_stats(self, duration=None, transient=0.0, n_episodes=8, seed=0) -> BaselineStats:
        """Unactuated statistics pooled over oscillators and ``n_episodes`` resets.

        Each run starts like an episode (random phases on the limit cycle)
        and lasts ``duration`` (default: the episode length); the first
        ``transient`` time units are dropped.
        """
        duration = self.episode.T_eps if duration is None else float(duration)
        if not 0 <= transient < duration:
            raise ConfigError(f"transient {transient} must lie in [0, {duration})")
        cls, cds = [], []
        for child in np.random.SeedSequence(seed).spawn(n_episodes):
            rng = np.random.default_rng(child)
            phases = rng.uniform(0, 2 * np.pi, self.n_marl)
            rec = []
            self._integrate_free(self.initial_state * np.exp(1j * phases), duration, rng, rec)
            t = np.array([r[0] for r in rec])
            cl, cd = pseudo_coefficients(np.array([r[1] for r in rec])[t > transient])
            cls.append(cl)
            cds.append(cd)
        return _pooled_stats(np.concatenate(cls), np.concatenate(cds), duration - transient)

    def _reset_state(self, seed):
        self.rng = np.random.default_rng(seed)
        phases = self.rng.uniform(0, 2 * np.pi, self.n_marl)
        self.state = self.initial_state * np.exp(1j * phases)
        self.time = 0.0

    def _sensors(self):
        return np.column_stack([self.state.real, self.state.imag])

    def _advance(self, actions, period):
        n, dt = self.substep_count(period, self.cfg.dt_int)
        ramp = self.ramp_fraction * period
        ts, cls, cds = [], [], []
        for k in range(n):
            a = action_ramp(self.current_actions, actions, (k + 1) * dt, ramp)
            self.state = self._noisy_step(self.state, a, dt, self.rng)
            self.time += dt
            cl, cd = pseudo_coefficients(self.state)
            ts.append(self.time)
            cls.append(cl)
            cds.append(cd)
        t = np.array(ts)
        cls, cds = np.array(cls), np.array(cds)
        return [ForceRecord(t, cls[:, m], cds[:, m]) for m in range(self.n_marl)]


def _pooled_stats(cl, cd, window):
    cl_mean = float(cl.mean())
    return BaselineStats(
        C_d_baseline=float(cd.mean()),
        C_l_baseline=cl_mean,
        C_l_rms=float(np.sqrt(np.mean((cl - cl_mean) ** 2))),
        window=float(window),
    )
