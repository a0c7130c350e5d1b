import numpy as np
import pytest

from afc import records
from afc.agent import checkpoint
from afc.agent.policy import Agent
from afc.envs.base import EpisodeConfig
from afc.errors import ConfigError, InputError, WorkerError
from afc.orchestrator.config import RunConfig, apply_overrides, dump_config, load_config
from afc.orchestrator.rollout import make_workers, run_episode, worker_seed
from afc.orchestrator.training import evaluate, train


def small_cfg(tmp_path, **kw):
    base = dict(n_cfd=2, n_marl=3, hidden=(16, 16), episode=EpisodeConfig(4.0, 8),
                n_training_steps=2, output_dir=str(tmp_path / "run"), reward_window=2.0)
    base.update(kw)
    return RunConfig(**base)


def test_thirty_trajectories(tmp_path):
    cfg = small_cfg(tmp_path, n_cfd=10, n_marl=3)
    agent = Agent.create(6, 1, (16, 16), seed=0)
    res = run_episode(make_workers(cfg), agent, cfg, 1)
    assert len(res.trajectories) == 30
    assert all(len(t) == cfg.episode.n_actions for t in res.trajectories)
    assert [(t.cfd_id, t.marl_id) for t in res.trajectories] == [(c, m) for c in range(10) for m in range(3)]
    for t in res.trajectories:
        t.validate()


def test_degenerate_configuration(tmp_path):
    cfg = small_cfg(tmp_path, n_cfd=1, n_marl=1)
    res = run_episode(make_workers(cfg), Agent.create(6, 1, (16, 16)), cfg)
    assert len(res.trajectories) == 1 and len(res.trajectories[0]) == 8


def test_episode_bitwise_reproducible(tmp_path):
    cfg = small_cfg(tmp_path)
    agent = Agent.create(6, 1, (16, 16), seed=4)
    a = run_episode(make_workers(cfg), agent, cfg, 3).serialize()
    b = run_episode(make_workers(cfg), agent, cfg, 3).serialize()
    assert a == b
    c = run_episode(make_workers(cfg), agent, cfg, 4).serialize()
    assert a != c


def test_worker_seeds_differ():
    seeds = {worker_seed(0, s, k) for s in range(5) for k in range(10)}
    assert len(seeds) == 50


def test_global_reward_blending_in_episode(tmp_path):
    cfg = small_cfg(tmp_path, n_cfd=1)
    res = run_episode(make_workers(cfg), Agent.create(6, 1, (16, 16)), cfg)
    loc = np.array([t.local_rewards for t in res.trajectories])
    glob = np.array([t.rewards for t in res.trajectories])
    g = cfg.reward.gamma
    assert np.allclose(glob, g * loc + (1 - g) * loc.mean(axis=0), rtol=0, atol=1e-14)


def test_training_outputs(tmp_path):
    cfg = small_cfg(tmp_path, n_training_steps=3)
    res = train(cfg)
    out = tmp_path / "run"
    curve = records.read_csv(out / "reward_curve.csv")
    assert len(curve["step"]) == 3 * 6
    assert list(curve["cfd_id"][:6]) == [0, 0, 0, 1, 1, 1]
    assert list(curve["marl_id"][:6]) == [0, 1, 2, 0, 1, 2]
    for k in range(4):
        assert (out / f"policy_{k}.ckpt").exists()
    assert load_config(out / "run_config.yaml").reward.C_d_baseline > 0
    assert checkpoint.dumps(checkpoint.load(res.checkpoint)) == checkpoint.dumps(res.agent)


def test_training_reproducible(tmp_path):
    a = train(small_cfg(tmp_path / "a"))
    b = train(small_cfg(tmp_path / "b"))
    assert checkpoint.dumps(a.agent) == checkpoint.dumps(b.agent)
    assert (tmp_path / "a/run/reward_curve.csv").read_bytes() == (tmp_path / "b/run/reward_curve.csv").read_bytes()


def test_zero_training_steps(tmp_path):
    res = train(small_cfg(tmp_path, n_training_steps=0))
    out = tmp_path / "run"
    assert sorted(p.name for p in out.glob("policy_*.ckpt")) == ["policy_0.ckpt"]
    assert records.read_csv(out / "reward_curve.csv")["step"].size == 0
    assert res.history == []


def test_evaluation_deterministic_and_written(tmp_path):
    cfg = small_cfg(tmp_path)
    res = train(cfg)
    e1 = evaluate(cfg, res.checkpoint, duration=20.0, out_dir=tmp_path / "e1", transient=5.0)
    evaluate(cfg, res.checkpoint, duration=20.0, out_dir=tmp_path / "e2", transient=5.0)
    for name in ("forces.csv", "actions.csv", "baseline_stats.txt"):
        assert (tmp_path / "e1" / name).read_bytes() == (tmp_path / "e2" / name).read_bytes()
    acts = records.read_csv(tmp_path / "e1/actions.csv")
    assert acts["t"].size == 3 * e1.actions.shape[0]
    assert e1.window == (5.0, pytest.approx(20.0))


def test_zero_policy_matches_baseline(tmp_path):
    cfg = small_cfg(tmp_path, n_marl=3)
    ev = evaluate(cfg, Agent.zeros(6, 1, (16, 16)), duration=100.0, transient=10.0)
    assert np.all(ev.actions == 0)
    from afc.orchestrator.rollout import make_env
    base = make_env(cfg).baseline_stats(duration=100.0, transient=10.0)
    assert ev.summary.C_d_mean == pytest.approx(base.C_d_baseline, rel=0.05)


def test_checkpoint_size_mismatch(tmp_path):
    cfg = small_cfg(tmp_path)
    with pytest.raises(InputError):
        evaluate(cfg, Agent.zeros(10, 1, (4,)), duration=2.0)


def test_worker_failure_carries_id(tmp_path):
    cfg = small_cfg(tmp_path, n_cfd=2, n_marl=1)
    workers = make_workers(cfg)

    def broken(seed):
        raise FloatingPointError("solver blew up")

    workers[1].env._reset_state = broken
    with pytest.raises(WorkerError) as err:
        run_episode(workers, Agent.create(6, 1, (16, 16)), cfg)
    assert err.value.cfd_id == 1


def test_config_roundtrip_and_overrides(tmp_path):
    cfg = RunConfig(n_cfd=3, hidden=(8, 8), episode=EpisodeConfig(5.0, 10))
    dump_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg
    over = load_config(tmp_path / "c.yaml", ["ppo.lr=1e-4", "n_marl=2", "cylinder.x_range=[-4, 12]"])
    assert over.ppo.lr == 1e-4 and over.n_marl == 2 and over.cylinder.x_range == (-4, 12)
    with pytest.raises(ConfigError):
        load_config(None, ["ppo.nonsense=1"])
    with pytest.raises(ConfigError):
        apply_overrides({}, ["missing_equals"])


def test_socket_mode_matches_in_process(tmp_path):
    cfg = small_cfg(tmp_path, mode="socket", n_cfd=2, n_marl=3, worker_timeout=120.0)
    from afc.orchestrator.remote import spawn_workers
    agent = Agent.create(6, 1, (16, 16), seed=2)
    workers = spawn_workers(cfg, tmp_path / "sock")
    try:
        remote = run_episode(workers, agent, cfg, 1)
        again = run_episode(workers, agent, cfg, 2)
    finally:
        for w in workers:
            w.close()
    local = run_episode(make_workers(cfg), agent, cfg, 1)
    assert remote.serialize() == local.serialize()
    assert len(again.trajectories) == 6


def test_cli_end_to_end(tmp_path, capsys):
    from afc.cli import main
    cfg = small_cfg(tmp_path, n_training_steps=1)
    dump_config(cfg, tmp_path / "run.yaml")
    assert main(["train", "--config", str(tmp_path / "run.yaml"), "--set", "n_cfd=1"]) == 0
    ckpt = tmp_path / "run/policy_1.ckpt"
    assert ckpt.exists()
    ev = tmp_path / "ev"
    assert main(["evaluate", "--config", str(tmp_path / "run.yaml"), "--checkpoint", str(ckpt),
                 "--duration", "30", "--output", str(ev)]) == 0
    assert main(["analyze", "--input", str(ev)]) == 0
    assert (ev / "summary.json").exists() and (ev / "psd.csv").exists()
    assert main(["evaluate", "--config", str(tmp_path / "run.yaml"), "--checkpoint", str(ckpt),
                 "--set", "env_kind=cylinder", "--set", "n_marl=1",
                 "--set", f"cylinder.baseline_dir={tmp_path / 'nobase'}"]) != 0
    assert "afc: error" in capsys.readouterr().err


def test_evaluation_without_transient(tmp_path):
    cfg = small_cfg(tmp_path)
    ev = evaluate(cfg, Agent.zeros(6, 1, (16, 16)), duration=4.0, transient=0.0)
    assert ev.window[0] > 0 and np.isfinite(ev.mean_reward)
