"""Jet-actuated cylinder environment wrapping the 2D flow solver."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from afc import records
from afc.envs.base import EpisodeConfig, Environment, ForceRecord, action_ramp
from afc.errors import SetupError
from afc.reward import BaselineStats, estimate_baseline
from afc.solver2d import (
    FlowField, FlowSolver, Grid, ProbeSampler, SolverConfig, apply_jets, default_body, default_layout,
)
from afc.solver2d.snapshot import load_state, save_state, write_snapshot

log = logging.getLogger(__name__)

STATE_FILE = "baseline_state.npz"
STATS_FILE = "baseline_stats.txt"
FORCES_FILE = "baseline_forces.csv"


@dataclass(frozen=True)
class CylinderEnvConfig:
    x_range: tuple = (-8.0, 20.0)
    y_range: tuple = (-15.0, 15.0)
    resolution: float = 16.0
    Re: float = 100.0
    cfl: float = 0.5
    AoA: float = 0.0
    arc_width_deg: float = 10.0
    action_bound: float = 1.0
    baseline_dir: str = "baseline"
    perturbation: float = 1e-3

    def grid(self):
        return Grid.from_extent(self.x_range, self.y_range, self.resolution)

    def solver_config(self):
        return SolverConfig(Re=self.Re, cfl=self.cfl, AoA=self.AoA)

    def body(self):
        return default_body(1, self.action_bound, self.arc_width_deg)


def solenoidal_noise(grid: Grid, rng, amplitude, smooth=4):
    """Random divergence-free velocity perturbation with max |u| = ``amplitude``.

    Built from a smoothed random streamfunction on the cell corners that
    vanishes on the boundary, so boundary fluxes are untouched.
    """
    psi = rng.standard_normal((grid.nx + 1, grid.ny + 1))
    kernel = np.ones(smooth) / smooth
    for axis in (0, 1):
        psi = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), axis, psi)
    psi[0, :] = psi[-1, :] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    du = (psi[:, 1:] - psi[:, :-1]) / grid.dy
    dv = -(psi[1:, :] - psi[:-1, :]) / grid.dx
    scale = amplitude / max(np.abs(du).max(), np.abs(dv).max(), 1e-300)
    return du * scale, dv * scale


def initial_kick(grid: Grid, strength=0.5, center=(1.0, 0.3), width=0.5):
    """Divergence-free vortex blob used to trigger shedding from a symmetric start."""
    x, y = np.meshgrid(grid.x_nodes(), grid.y_nodes(), indexing="ij")
    psi = strength * width * np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2) / width**2)
    du = (psi[:, 1:] - psi[:, :-1]) / grid.dy
    dv = -(psi[1:, :] - psi[:-1, :]) / grid.dx
    return du, dv


def run_baseline(cfg: CylinderEnvConfig, out_dir, transient=100.0, window=100.0, chunk=0.5, progress=None):
    """Unactuated run from a kicked uniform start.

    Writes the restart state, a text snapshot, the force record and the
    sidecar statistics (over the final ``window``) into ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, scfg, body = cfg.grid(), cfg.solver_config(), cfg.body()
    solver = FlowSolver(grid, scfg, body)
    field = FlowField.uniform(grid, scfg)
    du, dv = initial_kick(grid)
    field.u[1:-1] += du[1:-1]
    field.v += dv
    rows = []

    def record(f):
        cl, cd = solver.forces(f)
        rows.append((f.time, cl, cd))

    total = transient + window
    while field.time < total - 1e-9:
        field = solver.advance(field, min(chunk, total - field.time), body, record)
        if progress is not None:
            progress(field.time, total)
    arr = np.array(rows)
    stats = estimate_baseline(arr[:, 0], arr[:, 1], arr[:, 2], window)
    stats.save(out_dir / STATS_FILE)
    records.write_csv(out_dir / FORCES_FILE, records.FORCES_HEADER, rows)
    save_state(out_dir / STATE_FILE, field)
    write_snapshot(out_dir, grid, field)
    return stats, arr


def load_baseline_stats(baseline_dir) -> BaselineStats:
    path = Path(baseline_dir) / STATS_FILE
    if not path.exists():
        raise SetupError(f"baseline statistics {path} not found; run `afc baseline` first")
    return BaselineStats.load(path)


class CylinderEnv(Environment):
    """Single pseudo-environment: one jet pair, 90 pressure probes."""

    def __init__(self, cfg: CylinderEnvConfig = CylinderEnvConfig(),
                 episode: EpisodeConfig = EpisodeConfig(), layout=None, initial_state=None):
        self.cfg = cfg
        self.grid = cfg.grid()
        self.solver_cfg = cfg.solver_config()
        self.body = cfg.body()
        self.solver = FlowSolver(self.grid, self.solver_cfg, self.body)
        self.layout = default_layout(self.body) if layout is None else np.asarray(layout)
        self.sampler = ProbeSampler(self.grid, self.layout, self.body)
        super().__init__(episode, 1, len(self.sampler), cfg.action_bound)
        self._initial = initial_state
        self.field = None

    @property
    def time(self):
        return 0.0 if self.field is None else self.field.time

    def _load_initial(self):
        if self._initial is None:
            path = Path(self.cfg.baseline_dir) / STATE_FILE
            if not path.exists():
                raise SetupError(f"baseline snapshot {path} not found; run `afc baseline` first")
            self._initial = load_state(path)
            self._initial.check_shapes(self.grid)
        return self._initial

    def _reset_state(self, seed):
        start = self._load_initial()
        field = FlowField(start.u.copy(), start.v.copy(), start.p.copy(), 0.0)
        if self.cfg.perturbation > 0:
            du, dv = solenoidal_noise(self.grid, np.random.default_rng(seed), self.cfg.perturbation)
            field.u += du
            field.v += dv
            # one settling step lets the pressure (hence the probes) see the perturbation
            field = self.solver.step(field, self.solver.stable_dt(field), self.body)
            field.time = 0.0
        self.field = field

    def _sensors(self):
        return self.sampler.sample(self.field.p)[None, :]

    def _advance(self, actions, period):
        n, dt = self.solver.substeps(self.field, period)
        ramp = self.ramp_fraction * period
        t0 = self.field.time
        ts, cls, cds = [], [], []
        for k in range(n):
            jet = action_ramp(self.current_actions, actions, (k + 1) * dt, ramp)
            body = apply_jets(self.body, jet)
            self.field = self.solver.step(self.field, dt, body)
            cl, cd = self.solver.forces(self.field)
            ts.append(t0 + (k + 1) * dt)
            cls.append(cl)
            cds.append(cd)
        # keep time exact at action boundaries
        self.field.time = t0 + period
        return [ForceRecord(np.array(ts), np.array(cls), np.array(cds))]
