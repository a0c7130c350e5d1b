"""Environment workers and the synchronous episode loop."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from afc.agent.policy import Agent
from afc.agent.ppo import Trajectory
from afc.envs.base import EpisodeConfig, ForceRecord
from afc.envs.cylinder import CylinderEnv, CylinderEnvConfig, load_baseline_stats
from afc.envs.oscillator import OscillatorEnv, OscillatorLatticeConfig
from afc.errors import AfcError, WorkerError
from afc.orchestrator.config import RunConfig
from afc.reward import (
    RewardConfig, RunningLiftMean, global_rewards, local_reward, update_running_lift_mean,
)


def make_env(cfg: RunConfig, episode: EpisodeConfig | None = None):
    episode = episode or cfg.episode
    if cfg.env_kind == "oscillator":
        o = cfg.oscillator
        lattice = OscillatorLatticeConfig(cfg.n_marl, o.sigma, o.omega, o.kappa, o.b, o.noise_std, o.dt_int)
        return OscillatorEnv(lattice, episode, cfg.action_bound)
    return CylinderEnv(cylinder_config(cfg), episode)


def cylinder_config(cfg: RunConfig) -> CylinderEnvConfig:
    c = cfg.cylinder
    return CylinderEnvConfig(
        tuple(c.x_range), tuple(c.y_range), c.resolution, c.Re, c.cfl, c.AoA, c.arc_width_deg,
        cfg.action_bound, c.baseline_dir, c.perturbation,
    )


def resolve_reward(cfg: RunConfig) -> RunConfig:
    """Fill the reward baselines from the environment's baseline statistics."""
    if cfg.env_kind == "cylinder":
        stats = load_baseline_stats(cfg.cylinder.baseline_dir)
    else:
        stats = make_env(cfg).baseline_stats()
    reward = replace(cfg.reward, C_d_baseline=stats.C_d_baseline, C_l_baseline=stats.C_l_baseline)
    return cfg.replace(reward=reward)


def worker_seed(master_seed, step, cfd_id):
    """Per-episode worker seed derived from (master seed, training step, cfd_id)."""
    return int(np.random.SeedSequence([master_seed, step, cfd_id]).generate_state(1)[0])


def sampling_rng(master_seed, step):
    return np.random.default_rng(np.random.SeedSequence([master_seed, step, 2**31 - 1]))


@dataclass
class StepOutcome:
    observations: list
    rewards: np.ndarray          # blended R_i
    local_rewards: np.ndarray    # r_i
    records: list
    done: bool


class RolloutWorker:
    """Hosts one environment and turns its force records into rewards.

    Forces entering the reward are averaged over the action window; the
    running lift mean is fed with those window averages.
    """

    def __init__(self, cfd_id, env, reward: RewardConfig):
        self.cfd_id = cfd_id
        self.env = env
        self.reward = reward
        self.lift_means = []
        self.last_step = -1
        self._pending = None

    @property
    def n_marl(self):
        return self.env.n_marl

    def reset(self, seed):
        self.lift_means = [RunningLiftMean() for _ in range(self.env.n_marl)]
        self.last_step = 0
        return self.env.reset(seed)

    def step(self, actions) -> StepOutcome:
        obs, recs, done = self.env.step_action(actions)
        local = np.empty(len(recs))
        for m, rec in enumerate(recs):
            cl, cd = rec.window_means()
            self.lift_means[m] = update_running_lift_mean(self.lift_means[m], cl)
            local[m] = local_reward(cd, cl, self.lift_means[m].mean, self.reward)
        self.last_step += 1
        return StepOutcome(obs, global_rewards(local, self.reward.gamma), local, recs, done)

    # split-phase interface so remote workers can run concurrently
    def submit_reset(self, seed):
        self._pending = ("reset", seed)

    def submit_actions(self, actions):
        self._pending = ("step", np.asarray(actions, dtype=float))

    def collect(self):
        kind, arg = self._pending
        self._pending = None
        try:
            if kind == "reset":
                return self.reset(arg)
            return self.step(arg)
        except AfcError as exc:
            raise WorkerError(self.cfd_id, self.last_step, exc) from exc
        except (FloatingPointError, ValueError, RuntimeError) as exc:
            raise WorkerError(self.cfd_id, self.last_step, exc) from exc

    def close(self):
        pass


@dataclass
class EpisodeResult:
    trajectories: list
    forces: dict
    actions: dict
    raw_observations: np.ndarray
    mean_local_reward: dict
    wall_time: float = 0.0
    keys: list = field(default_factory=list)

    def serialize(self) -> bytes:
        """Byte string covering every numeric output, for reproducibility checks."""
        parts = []
        for tr in self.trajectories:
            for arr in (tr.obs, tr.raw_actions, tr.log_probs, tr.values, tr.rewards, tr.dones):
                parts.append(np.ascontiguousarray(arr, dtype=float).tobytes())
        for key in self.keys:
            rec = self.forces[key]
            parts += [rec.t.tobytes(), rec.C_l.tobytes(), rec.C_d.tobytes()]
            parts.append(np.float64(self.mean_local_reward[key]).tobytes())
        return b"".join(parts)


def _concat_records(recs):
    return ForceRecord(
        np.concatenate([r.t for r in recs]),
        np.concatenate([r.C_l for r in recs]),
        np.concatenate([r.C_d for r in recs]),
    )


def run_episode(workers, agent: Agent, cfg: RunConfig, step_index=0) -> EpisodeResult:
    """Run one synchronous episode on every worker with a fixed policy snapshot.

    Observations from all pseudo-environments are batched for inference in
    (cfd_id, marl_id) order; results are aggregated in the same order
    regardless of how workers finish.
    """
    start = time.perf_counter()
    workers = sorted(workers, key=lambda w: w.cfd_id)
    rng = sampling_rng(cfg.seed, step_index)
    n_actions = cfg.episode.n_actions
    T_act = cfg.episode.T_act
    for w in workers:
        w.submit_reset(worker_seed(cfg.seed, step_index, w.cfd_id))
    obs = [w.collect() for w in workers]
    keys = [(w.cfd_id, m) for w in workers for m in range(w.n_marl)]
    n = len(keys)
    obs_dim = agent.obs_size
    buf_obs = np.zeros((n, n_actions, obs_dim))
    buf_raw_obs = np.zeros((n, n_actions, obs_dim))
    buf_raw = np.zeros((n, n_actions, agent.act_size))
    buf_act = np.zeros((n, n_actions))
    buf_logp = np.zeros((n, n_actions))
    buf_val = np.zeros((n, n_actions))
    buf_rew = np.zeros((n, n_actions))
    buf_local = np.zeros((n, n_actions))
    recs = {k: [] for k in keys}
    for t in range(n_actions):
        flat = np.array([o for per_worker in obs for o in per_worker])
        x, raw, bounded, logp, value = agent.act(flat, rng)
        buf_raw_obs[:, t] = flat
        buf_obs[:, t] = x
        buf_raw[:, t] = raw
        buf_act[:, t] = bounded[:, 0]
        buf_logp[:, t] = logp
        buf_val[:, t] = value
        pos = 0
        for w in workers:
            w.submit_actions(bounded[pos:pos + w.n_marl, 0])
            pos += w.n_marl
        outcomes = [w.collect() for w in workers]
        obs = []
        pos = 0
        for w, out in zip(workers, outcomes):
            obs.append(out.observations)
            for m in range(w.n_marl):
                buf_rew[pos + m, t] = out.rewards[m]
                buf_local[pos + m, t] = out.local_rewards[m]
                recs[(w.cfd_id, m)].append(out.records[m])
            pos += w.n_marl

    dones = np.zeros(n_actions, dtype=bool)
    dones[-1] = True
    trajectories, forces, actions, mean_local = [], {}, {}, {}
    window_start = cfg.episode.T_eps - cfg.reward_window
    action_end = T_act * (np.arange(n_actions) + 1)
    in_window = action_end > window_start + 1e-9
    for k, key in enumerate(keys):
        trajectories.append(Trajectory(
            buf_obs[k], buf_raw[k], buf_logp[k], buf_val[k], buf_rew[k], dones.copy(),
            cfd_id=key[0], marl_id=key[1], local_rewards=buf_local[k],
        ))
        forces[key] = _concat_records(recs[key])
        actions[key] = buf_act[k]
        mean_local[key] = float(buf_local[k][in_window].mean())
    return EpisodeResult(
        trajectories, forces, actions, buf_raw_obs.reshape(-1, obs_dim), mean_local,
        time.perf_counter() - start, keys,
    )


def make_workers(cfg: RunConfig):
    return [RolloutWorker(k, make_env(cfg), cfg.reward) for k in range(cfg.n_cfd)]
