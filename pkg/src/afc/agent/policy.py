"""Squashed-Gaussian policy head, value head and observation normaliser."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from afc.agent.mlp import MlpParams, forward

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class PolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray

    @property
    def std(self):
        return np.exp(self.log_std)


def policy_forward(params: MlpParams, obs, log_std) -> PolicyOutput:
    mean, _ = forward(params, obs)
    ls = np.clip(np.asarray(log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX)
    return PolicyOutput(mean, np.broadcast_to(ls, mean.shape).copy())


def value_forward(params: MlpParams, obs):
    out, _ = forward(params, obs)
    return out[..., 0]


def _log_cosh_jacobian(raw):
    # log(1 - tanh(x)^2) computed without cancellation
    return 2.0 * (np.log(2.0) - raw - np.logaddexp(0.0, -2.0 * raw))


def gaussian_log_prob(out: PolicyOutput, raw):
    z = (raw - out.mean) / out.std
    return np.sum(-0.5 * z**2 - out.log_std - _HALF_LOG_2PI, axis=-1)


def log_prob(out: PolicyOutput, raw, bound):
    """Log density of the bounded action ``bound * tanh(raw)``."""
    raw = np.asarray(raw, dtype=float)
    jac = np.sum(np.log(bound) + _log_cosh_jacobian(raw), axis=-1)
    return gaussian_log_prob(out, raw) - jac


def sample_action(out: PolicyOutput, rng, bound):
    """Draw ``raw ~ N(mean, std)`` and squash it into ``(-bound, bound)``."""
    raw = out.mean + out.std * rng.standard_normal(np.shape(out.mean))
    return raw, bound * np.tanh(raw), log_prob(out, raw, bound)


def entropy(log_std):
    """Entropy of the unsquashed Gaussian (per sample)."""
    ls = np.clip(np.asarray(log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX)
    return float(np.sum(ls + _HALF_LOG_2PI + 0.5))


@dataclass
class RunningNormalizer:
    """Running mean/variance of observations (parallel-merge update)."""

    mean: np.ndarray
    var: np.ndarray
    count: float = 1e-4
    clip: float = 10.0
    frozen: bool = False

    @classmethod
    def create(cls, size):
        return cls(np.zeros(size), np.ones(size))

    def update(self, batch):
        if self.frozen:
            return
        batch = np.asarray(batch, dtype=float).reshape(-1, self.mean.size)
        n = batch.shape[0]
        if n == 0:
            return
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        total = self.count + n
        delta = b_mean - self.mean
        self.mean = self.mean + delta * n / total
        m2 = self.var * self.count + b_var * n + delta**2 * self.count * n / total
        self.var = m2 / total
        self.count = total

    def __call__(self, obs):
        z = (np.asarray(obs, dtype=float) - self.mean) / np.sqrt(self.var + 1e-8)
        return np.clip(z, -self.clip, self.clip)

    def copy(self):
        return RunningNormalizer(self.mean.copy(), self.var.copy(), self.count, self.clip, self.frozen)


@dataclass
class Agent:
    """Shared actor-critic used by every pseudo-environment."""

    actor: MlpParams
    critic: MlpParams
    log_std: np.ndarray
    normalizer: RunningNormalizer
    action_bound: float = 1.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def create(cls, obs_size, act_size=1, hidden=(512, 512), action_bound=1.0,
               init_std=0.2, seed=0):
        rng = np.random.default_rng(seed)
        sizes_a = [obs_size, *hidden, act_size]
        sizes_c = [obs_size, *hidden, 1]
        return cls(
            actor=MlpParams.init(sizes_a, rng, out_scale=0.01),
            critic=MlpParams.init(sizes_c, rng, out_scale=1.0),
            log_std=np.full(act_size, np.log(init_std)),
            normalizer=RunningNormalizer.create(obs_size),
            action_bound=float(action_bound),
        )

    @classmethod
    def zeros(cls, obs_size, act_size=1, hidden=(512, 512), action_bound=1.0, init_std=0.2):
        return cls(
            actor=MlpParams.zeros([obs_size, *hidden, act_size]),
            critic=MlpParams.zeros([obs_size, *hidden, 1]),
            log_std=np.full(act_size, np.log(init_std)),
            normalizer=RunningNormalizer.create(obs_size),
            action_bound=float(action_bound),
        )

    @property
    def obs_size(self):
        return self.actor.sizes[0]

    @property
    def act_size(self):
        return self.actor.sizes[-1]

    def copy(self):
        return Agent(self.actor.copy(), self.critic.copy(), self.log_std.copy(),
                     self.normalizer.copy(), self.action_bound, dict(self.meta))

    def act(self, obs, rng=None, deterministic=False):
        """Normalised observation, raw action, bounded action, log-prob and value for a batch."""
        x = self.normalizer(obs)
        out = policy_forward(self.actor, x, self.log_std)
        value = value_forward(self.critic, x)
        if deterministic:
            raw = out.mean
            return x, raw, self.action_bound * np.tanh(raw), log_prob(out, raw, self.action_bound), value
        raw, bounded, lp = sample_action(out, rng, self.action_bound)
        return x, raw, bounded, lp, value
