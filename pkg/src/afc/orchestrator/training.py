"""Training loop, deterministic evaluation and their file outputs."""
from __future__ import annotations

import logging
import math
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from afc import records
from afc.agent import checkpoint
from afc.agent.policy import Agent
from afc.agent.ppo import PpoLearner
from afc.analysis import AeroSummary, TimeSeries, aero_summary
from afc.envs.base import EpisodeConfig
from afc.envs.cylinder import STATS_FILE
from afc.errors import InputError, UpdateAbortedError
from afc.orchestrator.config import RunConfig, dump_config
from afc.orchestrator.rollout import (
    RolloutWorker, make_env, make_workers, resolve_reward, run_episode,
)

log = logging.getLogger(__name__)

TRAIN_LOG_HEADER = ("step", "loss", "policy_loss", "value_loss", "entropy", "approx_kl",
                    "clip_fraction", "mean_reward", "wall_time")


def checkpoint_name(step):
    return f"policy_{step}.ckpt"


@dataclass
class TrainResult:
    agent: Agent
    checkpoint: Path
    reward_curve: Path
    history: list


def _open_workers(cfg: RunConfig, out_dir):
    if cfg.mode == "socket":
        from afc.orchestrator.remote import spawn_workers
        return spawn_workers(cfg, out_dir)
    return make_workers(cfg)


def _needs_baseline(cfg: RunConfig):
    return cfg.reward.C_d_baseline == 0.0 and cfg.reward.C_l_baseline == 0.0


def train(cfg: RunConfig, progress=None) -> TrainResult:
    """Alternate episodes and PPO updates for ``cfg.n_training_steps`` steps.

    Writes ``policy_<k>.ckpt`` after every update, appends one row per
    pseudo-environment to ``reward_curve.csv`` after every episode (in
    (cfd_id, marl_id) order) and logs update diagnostics to
    ``train_log.csv``. Reward baselines left at zero in the config are
    filled from the environment's baseline statistics.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if _needs_baseline(cfg):
        cfg = resolve_reward(cfg)
    dump_config(cfg, out / "run_config.yaml")
    probe_env = make_env(cfg)
    agent = Agent.create(probe_env.obs_size, 1, tuple(cfg.hidden), cfg.action_bound,
                         seed=int(np.random.SeedSequence([cfg.seed, 1]).generate_state(1)[0]))
    del probe_env
    learner = PpoLearner(cfg.ppo, seed=int(np.random.SeedSequence([cfg.seed, 2]).generate_state(1)[0]))
    ckpt = out / checkpoint_name(0)
    checkpoint.save(agent, ckpt)
    curve = out / "reward_curve.csv"
    records.write_csv(curve, records.REWARD_CURVE_HEADER, [])
    train_log = out / "train_log.csv"
    records.write_csv(train_log, TRAIN_LOG_HEADER, [])
    history = []
    if cfg.n_training_steps == 0:
        return TrainResult(agent, ckpt, curve, history)

    workers = _open_workers(cfg, out)
    try:
        for step in range(1, cfg.n_training_steps + 1):
            result = run_episode(workers, agent, cfg, step)
            records.append_csv(curve, records.REWARD_CURVE_HEADER, [
                (step, cfd, marl, result.mean_local_reward[(cfd, marl)]) for cfd, marl in result.keys
            ])
            new_agent, diag = learner.update(agent, result.trajectories)
            if diag.get("aborted"):
                raise UpdateAbortedError(
                    f"non-finite loss at update {step}; last good checkpoint is {ckpt}"
                )
            agent = new_agent
            agent.normalizer.update(result.raw_observations)
            ckpt = out / checkpoint_name(step)
            checkpoint.save(agent, ckpt)
            mean_reward = float(np.mean(list(result.mean_local_reward.values())))
            row = (step, diag["loss"], diag["policy_loss"], diag["value_loss"], diag["entropy"],
                   diag["approx_kl"], diag["clip_fraction"], mean_reward, result.wall_time)
            records.append_csv(train_log, TRAIN_LOG_HEADER, [row])
            history.append(dict(zip(TRAIN_LOG_HEADER, row)))
            log.info("step %d: mean local reward %.5f (%.1fs)", step, mean_reward, result.wall_time)
            if progress is not None:
                progress(step, mean_reward)
    finally:
        for w in workers:
            w.close()
    return TrainResult(agent, ckpt, curve, history)


@dataclass
class EvaluationResult:
    t: np.ndarray
    C_l: np.ndarray          # (n_samples, n_marl)
    C_d: np.ndarray
    action_t: np.ndarray
    actions: np.ndarray      # (n_actions, n_marl)
    local_rewards: np.ndarray
    summary: AeroSummary | None
    window: tuple

    def window_mask(self):
        return (self.t >= self.window[0]) & (self.t <= self.window[1])

    @property
    def mean_reward(self):
        return float(self.local_rewards.mean())


def evaluate(cfg: RunConfig, agent_or_path, duration=None, out_dir=None, seed=None, transient=None):
    """Run the deterministic (mean, squashed) policy and write forces.csv and actions.csv."""
    agent = agent_or_path if isinstance(agent_or_path, Agent) else checkpoint.load(agent_or_path)
    ev = cfg.evaluation
    duration = ev.duration if duration is None else duration
    transient = ev.transient if transient is None else transient
    seed = ev.seed if seed is None else seed
    if _needs_baseline(cfg):
        cfg = resolve_reward(cfg)
    T_act = cfg.episode.T_act
    n = max(1, math.ceil(duration / T_act - 1e-9))
    env = make_env(cfg, EpisodeConfig(n * T_act, n))
    if agent.obs_size != env.obs_size:
        raise InputError(f"checkpoint expects {agent.obs_size} inputs, environment provides {env.obs_size}")
    worker = RolloutWorker(0, env, cfg.reward)
    obs = worker.reset(seed)
    ts, cls, cds, acts, rews = [], [], [], [], []
    for _ in range(n):
        _, _, bounded, _, _ = agent.act(np.array(obs), deterministic=True)
        a = bounded[:, 0]
        acts.append(a)
        out = worker.step(a)
        ts.append(out.records[0].t)
        cls.append(np.column_stack([r.C_l for r in out.records]))
        cds.append(np.column_stack([r.C_d for r in out.records]))
        rews.append(out.local_rewards)
        obs = out.observations
    t = np.concatenate(ts)
    C_l = np.concatenate(cls)
    C_d = np.concatenate(cds)
    action_t = T_act * np.arange(n)
    actions = np.array(acts)
    t0 = max(transient, t[0]) if transient < t[-1] else t[0]
    summary = aero_summary(TimeSeries(t, C_l.mean(axis=1)), TimeSeries(t, C_d.mean(axis=1)), (t0, t[-1]))
    result = EvaluationResult(t, C_l, C_d, action_t, actions, np.array(rews), summary, (t0, float(t[-1])))
    if out_dir is not None:
        write_evaluation(result, cfg, out_dir)
    return result


def write_evaluation(result: EvaluationResult, cfg: RunConfig, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records.write_csv(out / "forces.csv", records.FORCES_HEADER,
                      zip(result.t, result.C_l.mean(axis=1), result.C_d.mean(axis=1)))
    rows = [(t, m, result.actions[k, m]) for k, t in enumerate(result.action_t)
            for m in range(result.actions.shape[1])]
    records.write_csv(out / "actions.csv", records.ACTIONS_HEADER, rows)
    if cfg.env_kind == "cylinder":
        src = Path(cfg.cylinder.baseline_dir) / STATS_FILE
        if src.exists() and src.resolve() != (out / STATS_FILE).resolve():
            shutil.copyfile(src, out / STATS_FILE)
    else:
        stats = make_env(cfg).baseline_stats(duration=result.window[1], transient=result.window[0])
        stats.save(out / STATS_FILE)
