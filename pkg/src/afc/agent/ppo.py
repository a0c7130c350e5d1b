"""Clipped-surrogate PPO with generalised advantage estimation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from afc.agent.mlp import backward, forward
from afc.agent.policy import LOG_STD_MAX, LOG_STD_MIN, Agent, PolicyOutput, entropy, log_prob
from afc.errors import ConfigError, InputError


@dataclass(frozen=True)
class PpoConfig:
    clip_eps: float = 0.2
    lr: float = 3e-4
    epochs: int = 10
    minibatch: int = 30
    discount: float = 0.99
    gae_lambda: float = 0.95
    entropy_coef: float = 1e-3
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True

    def __post_init__(self):
        if self.clip_eps <= 0:
            raise ConfigError("clip_eps must be positive")
        if not 0 <= self.discount <= 1 or not 0 <= self.gae_lambda <= 1:
            raise ConfigError("discount and gae_lambda must lie in [0, 1]")
        if self.epochs < 1 or self.minibatch < 1:
            raise ConfigError("epochs and minibatch must be at least 1")


@dataclass
class Trajectory:
    """One pseudo-environment's episode. Observations are stored normalised."""

    obs: np.ndarray
    raw_actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    cfd_id: int = 0
    marl_id: int = 0
    local_rewards: np.ndarray | None = None

    def __len__(self):
        return len(self.rewards)

    def validate(self):
        n = len(self.rewards)
        for name in ("obs", "raw_actions", "log_probs", "values", "dones"):
            if len(getattr(self, name)) != n:
                raise InputError(f"trajectory field {name} has length {len(getattr(self, name))}, expected {n}")
        dones = np.asarray(self.dones, dtype=bool)
        if n == 0 or not dones[-1] or dones[:-1].any():
            raise InputError("incomplete trajectory: exactly one done flag, on the final tuple, is required")


def compute_gae(traj: Trajectory, discount, gae_lambda):
    """Advantages by reverse scan of TD residuals; returns = advantages + values."""
    traj.validate()
    r = np.asarray(traj.rewards, dtype=float)
    v = np.asarray(traj.values, dtype=float)
    d = np.asarray(traj.dones, dtype=float)
    n = len(r)
    v_next = np.append(v[1:], 0.0)
    delta = r + discount * v_next * (1.0 - d) - v
    adv = np.zeros(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        acc = delta[t] + discount * gae_lambda * (1.0 - d[t]) * acc
        adv[t] = acc
    return adv, adv + v


def clipped_surrogate(ratio, advantage, clip_eps):
    return np.minimum(ratio * advantage, np.clip(ratio, 1 - clip_eps, 1 + clip_eps) * advantage)


class Adam:
    """Adam with bias correction over a fixed list of arrays (updated in place)."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _actor_tensors(agent: Agent):
    return agent.actor.tensors() + [agent.log_std]


def _clip_by_norm(grads, max_norm):
    norm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
    if max_norm is not None and max_norm > 0 and norm > max_norm:
        grads = [g * (max_norm / norm) for g in grads]
    return grads, norm


def loss_and_grads(agent: Agent, batch, cfg: PpoConfig):
    """Total PPO loss on ``batch`` and its exact gradients.

    ``batch`` holds ``obs, raw, old_logp, adv, ret``. Returns
    ``(loss, actor_grads, critic_grads, info)`` where ``actor_grads`` ends
    with the log-std gradient.
    """
    obs, raw, old_logp, adv, ret = (batch[k] for k in ("obs", "raw", "old_logp", "adv", "ret"))
    b = len(adv)
    mean, acts_a = forward(agent.actor, obs)
    ls = np.clip(agent.log_std, LOG_STD_MIN, LOG_STD_MAX)
    out = PolicyOutput(mean, np.broadcast_to(ls, mean.shape))
    new_logp = log_prob(out, raw, agent.action_bound)
    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1 - cfg.clip_eps, 1 + cfg.clip_eps)
    surr = np.minimum(ratio * adv, clipped * adv)
    policy_loss = -surr.mean()
    ent = entropy(agent.log_std)

    values, acts_c = forward(agent.critic, obs)
    values = values[:, 0]
    value_loss = np.mean((values - ret) ** 2)
    loss = policy_loss - cfg.entropy_coef * ent + cfg.value_coef * value_loss

    unclipped = ratio * adv <= clipped * adv
    d_ratio = np.where(unclipped, -adv / b, 0.0)
    d_logp = d_ratio * ratio
    var = out.std**2
    g_mean = d_logp[:, None] * (raw - mean) / var
    gw, gb = backward(agent.actor, acts_a, g_mean)
    z2 = (raw - mean) ** 2 / var
    g_log_std = np.sum(d_logp[:, None] * (z2 - 1.0), axis=0) - cfg.entropy_coef
    active = (agent.log_std > LOG_STD_MIN) & (agent.log_std < LOG_STD_MAX)
    g_log_std = np.where(active, g_log_std, 0.0)
    actor_grads = []
    for w, bb in zip(gw, gb):
        actor_grads += [w, bb]
    actor_grads.append(g_log_std)

    g_v = (2.0 * cfg.value_coef / b) * (values - ret)
    cw, cb = backward(agent.critic, acts_c, g_v[:, None])
    critic_grads = []
    for w, bb in zip(cw, cb):
        critic_grads += [w, bb]

    info = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(ent),
        "approx_kl": float(np.mean(old_logp - new_logp)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1) > cfg.clip_eps)),
    }
    return float(loss), actor_grads, critic_grads, info


def build_batch(trajectories, cfg: PpoConfig):
    if not trajectories:
        raise InputError("ppo_update needs at least one trajectory")
    advs, rets = [], []
    for tr in trajectories:
        a, r = compute_gae(tr, cfg.discount, cfg.gae_lambda)
        advs.append(a)
        rets.append(r)
    adv = np.concatenate(advs)
    if cfg.normalize_advantages and adv.size > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return {
        "obs": np.concatenate([np.asarray(t.obs, dtype=float) for t in trajectories]),
        "raw": np.concatenate([np.asarray(t.raw_actions, dtype=float).reshape(len(t), -1) for t in trajectories]),
        "old_logp": np.concatenate([np.asarray(t.log_probs, dtype=float) for t in trajectories]),
        "adv": adv,
        "ret": np.concatenate(rets),
    }


@dataclass
class PpoLearner:
    """Holds optimiser state across updates; ``update`` is the single writer of the agent."""

    cfg: PpoConfig = field(default_factory=PpoConfig)
    seed: int = 0

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self.actor_opt = Adam(self.cfg.lr)
        self.critic_opt = Adam(self.cfg.lr)

    def update(self, agent: Agent, trajectories):
        """Return ``(new_agent, diagnostics)``; on non-finite loss the input agent is returned."""
        cfg = self.cfg
        batch = build_batch(trajectories, cfg)
        new = agent.copy()
        n = len(batch["adv"])
        sums = {}
        count = 0
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch):
                idx = order[start:start + cfg.minibatch]
                mb = {k: v[idx] for k, v in batch.items()}
                loss, ga, gc, info = loss_and_grads(new, mb, cfg)
                if not (np.isfinite(loss) and all(np.all(np.isfinite(g)) for g in ga + gc)):
                    info["aborted"] = True
                    return agent, info
                ga, na = _clip_by_norm(ga, cfg.max_grad_norm)
                gc, nc = _clip_by_norm(gc, cfg.max_grad_norm)
                self.actor_opt.step(_actor_tensors(new), ga)
                self.critic_opt.step(new.critic.tensors(), gc)
                info["grad_norm_actor"], info["grad_norm_critic"] = na, nc
                for k, val in info.items():
                    sums[k] = sums.get(k, 0.0) + val
                count += 1
        diag = {k: v / count for k, v in sums.items()}
        diag["aborted"] = False
        diag["n_samples"] = n
        if not (new.actor.is_finite() and new.critic.is_finite() and np.all(np.isfinite(new.log_std))):
            diag["aborted"] = True
            return agent, diag
        return new, diag


def ppo_update(agent: Agent, trajectories, cfg: PpoConfig, learner: PpoLearner | None = None):
    """One PPO update from a fresh (or the supplied) optimiser state."""
    learner = learner if learner is not None else PpoLearner(cfg)
    return learner.update(agent, trajectories)
