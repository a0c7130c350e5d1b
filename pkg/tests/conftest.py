import numpy as np
import pytest

from afc.solver2d import FlowField, FlowSolver, Grid, SolverConfig


def taylor_green_error(n, nu=0.1, t_end=1.0, cfl=0.5):
    """L2 velocity error of the periodic Taylor-Green vortex at ``t_end``."""
    L = 2 * np.pi
    g = Grid(n, n, L / n, L / n, (0.0, 0.0), "periodic")
    cfg = SolverConfig(Re=1.0 / nu, cfl=cfl)
    xu, yu = g.u_coords()
    xv, yv = g.v_coords()
    xp, yp = g.p_coords()
    f = FlowField(np.sin(xu) * np.cos(yu), -np.cos(xv) * np.sin(yv),
                  0.25 * (np.cos(2 * xp) + np.cos(2 * yp)))
    f = FlowSolver(g, cfg).advance(f, t_end)
    decay = np.exp(-2 * nu * t_end)
    eu = f.u - np.sin(xu) * np.cos(yu) * decay
    ev = f.v + np.cos(xv) * np.sin(yv) * decay
    return float(np.sqrt((np.sum(eu[:-1] ** 2) + np.sum(ev[:, :-1] ** 2)) * g.dx * g.dy))


@pytest.fixture
def small_channel():
    grid = Grid.from_extent((-3.0, 7.0), (-3.0, 3.0), 8)
    return grid, SolverConfig(Re=100.0)


def fd_gradient_error(seed=0, eps=1e-6):
    """Worst relative error between analytic and central-difference PPO loss gradients."""
    from afc.agent.mlp import MlpParams
    from afc.agent.policy import Agent
    from afc.agent.ppo import PpoConfig, _actor_tensors, loss_and_grads

    rng = np.random.default_rng(seed)
    agent = Agent.create(2, 1, hidden=(3,), seed=seed)
    agent.actor = MlpParams.init([2, 3, 1], rng, 1.0)
    agent.log_std[:] = -0.5
    b = 7
    batch = dict(obs=rng.normal(size=(b, 2)), raw=rng.normal(size=(b, 1)),
                 old_logp=rng.normal(size=b) - 1.0, adv=rng.normal(size=b), ret=rng.normal(size=b))
    cfg = PpoConfig(entropy_coef=0.01, clip_eps=10.0)  # keep every sample on the smooth branch
    _, ga, gc, _ = loss_and_grads(agent, batch, cfg)
    worst = 0.0
    for p, g in zip(_actor_tensors(agent) + agent.critic.tensors(), ga + gc):
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + eps
            lp = loss_and_grads(agent, batch, cfg)[0]
            p[idx] = orig - eps
            lm = loss_and_grads(agent, batch, cfg)[0]
            p[idx] = orig
            fd = (lp - lm) / (2 * eps)
            worst = max(worst, abs(fd - g[idx]) / max(abs(fd), abs(g[idx]), 1e-8))
    return worst


def run_bandit(target=0.3, updates=200, batch=64, seed=0):
    """One-step bandit with reward -(a - target)^2; returns deterministic actions per update."""
    from afc.agent.policy import Agent
    from afc.agent.ppo import PpoConfig, PpoLearner, Trajectory

    agent = Agent.create(1, 1, hidden=(64, 64), seed=seed)
    learner = PpoLearner(PpoConfig(lr=3e-3, minibatch=32, entropy_coef=0.0), seed=seed)
    rng = np.random.default_rng(seed + 1)
    obs = np.ones((batch, 1))
    history = []
    for _ in range(updates):
        x, raw, a, lp, v = agent.act(obs, rng)
        r = -(a[:, 0] - target) ** 2
        trajs = [Trajectory(x[i:i + 1], raw[i:i + 1], lp[i:i + 1], v[i:i + 1], r[i:i + 1], np.array([True]))
                 for i in range(batch)]
        agent, _ = learner.update(agent, trajs)
        history.append(float(agent.act(np.ones((1, 1)), deterministic=True)[2][0, 0]))
    return np.array(history)


def oscillator_trial(seed, out_dir, n_training_steps=30, duration=60.0):
    """Train on the oscillator lattice and return (trained, unactuated) mean pseudo-drag."""
    from afc.agent.policy import Agent
    from afc.orchestrator.config import RunConfig
    from afc.orchestrator.training import evaluate, train

    cfg = RunConfig(n_cfd=4, n_marl=3, n_training_steps=n_training_steps, seed=seed, output_dir=str(out_dir))
    res = train(cfg)
    ev = evaluate(cfg, res.agent, duration=duration)
    zero = evaluate(cfg, Agent.zeros(res.agent.obs_size, 1, tuple(cfg.hidden)), duration=duration)
    drag = ev.C_d[ev.window_mask()].sum(axis=1).mean()
    drag0 = zero.C_d[zero.window_mask()].sum(axis=1).mean()
    return float(drag), float(drag0), res
