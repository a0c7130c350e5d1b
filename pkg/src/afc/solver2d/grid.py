"""Staggered (MAC) grid, solver settings and the flow state container."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from afc.errors import ConfigError


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid. Lengths are in cylinder diameters.

    ``bc`` is ``"channel"`` (inflow left, outflow right, slip/freestream top
    and bottom) or ``"periodic"`` in both directions.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)
    bc: str = "channel"

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ConfigError(f"grid needs at least 8x8 cells, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ConfigError("cell sizes must be positive")
        if self.bc not in ("channel", "periodic"):
            raise ConfigError(f"unknown boundary mode {self.bc!r}")

    @classmethod
    def from_extent(cls, x_range, y_range, resolution, bc="channel"):
        """Grid covering ``x_range`` x ``y_range`` with ``resolution`` cells per unit length."""
        lx = x_range[1] - x_range[0]
        ly = y_range[1] - y_range[0]
        nx = int(round(lx * resolution))
        ny = int(round(ly * resolution))
        return cls(nx, ny, lx / nx, ly / ny, (float(x_range[0]), float(y_range[0])), bc)

    @property
    def extent(self):
        return (self.nx * self.dx, self.ny * self.dy)

    @property
    def periodic(self):
        return self.bc == "periodic"

    def x_nodes(self):
        return self.origin[0] + self.dx * np.arange(self.nx + 1)

    def y_nodes(self):
        return self.origin[1] + self.dy * np.arange(self.ny + 1)

    def x_centers(self):
        return self.origin[0] + self.dx * (np.arange(self.nx) + 0.5)

    def y_centers(self):
        return self.origin[1] + self.dy * (np.arange(self.ny) + 0.5)

    def u_coords(self):
        return np.meshgrid(self.x_nodes(), self.y_centers(), indexing="ij")

    def v_coords(self):
        return np.meshgrid(self.x_centers(), self.y_nodes(), indexing="ij")

    def p_coords(self):
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")

    def contains(self, x, y):
        x0, y0 = self.origin
        lx, ly = self.extent
        return x0 <= x <= x0 + lx and y0 <= y <= y0 + ly


@dataclass(frozen=True)
class SolverConfig:
    Re: float = 100.0
    U_inf: float = 1.0
    AoA: float = 0.0
    cfl: float = 0.5
    poisson_tol: float = 1e-8
    poisson_max_iter: int = 2000
    poisson_method: str = "spectral"

    def __post_init__(self):
        if self.Re <= 0:
            raise ConfigError("Re must be positive")
        if not 0 < self.cfl <= 0.9:
            raise ConfigError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.poisson_tol <= 0:
            raise ConfigError("poisson_tol must be positive")
        if self.poisson_method not in ("spectral", "pcg"):
            raise ConfigError(f"unknown poisson method {self.poisson_method!r}")

    @property
    def nu(self):
        # D = 1 so nu = U D / Re
        return self.U_inf / self.Re

    @property
    def inflow(self):
        a = np.deg2rad(self.AoA)
        return self.U_inf * np.cos(a), self.U_inf * np.sin(a)


@dataclass
class FlowField:
    """Velocity on cell faces, pressure at cell centres.

    Shapes: ``u`` (nx+1, ny), ``v`` (nx, ny+1), ``p`` (nx, ny).
    """

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    time: float = 0.0
    step_count: int = 0
    # previous explicit right-hand sides for Adams-Bashforth; not part of the physical state
    history: dict = field(default_factory=dict, repr=False)

    def check_shapes(self, grid: Grid):
        nx, ny = grid.nx, grid.ny
        expected = {"u": (nx + 1, ny), "v": (nx, ny + 1), "p": (nx, ny)}
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ConfigError(f"{name} has shape {actual}, expected {shape}")

    def copy(self):
        hist = {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.history.items()}
        return replace(self, u=self.u.copy(), v=self.v.copy(), p=self.p.copy(), history=hist)

    @classmethod
    def uniform(cls, grid: Grid, cfg: SolverConfig):
        uin, vin = cfg.inflow
        return cls(
            u=np.full((grid.nx + 1, grid.ny), uin),
            v=np.full((grid.nx, grid.ny + 1), vin),
            p=np.zeros((grid.nx, grid.ny)),
        )


def divergence(grid: Grid, u, v):
    return (u[1:, :] - u[:-1, :]) / grid.dx + (v[:, 1:] - v[:, :-1]) / grid.dy


def cell_velocity(u, v):
    """Velocity components averaged to cell centres."""
    return 0.5 * (u[1:, :] + u[:-1, :]), 0.5 * (v[:, 1:] + v[:, :-1])


def vorticity(grid: Grid, u, v):
    """Vorticity dv/dx - du/dy at cell centres (second-order, one-sided at edges)."""
    uc, vc = cell_velocity(u, v)
    dvdx = np.gradient(vc, grid.dx, axis=0)
    dudy = np.gradient(uc, grid.dy, axis=1)
    return dvdx - dudy
