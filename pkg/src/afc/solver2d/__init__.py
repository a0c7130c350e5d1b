"""2D incompressible flow past a jet-actuated cylinder."""
from afc.solver2d.body import BodyGeometry, ImmersedBody, JetPair, apply_jets, default_body, net_surface_flux
from afc.solver2d.flow import FlowSolver, compute_forces, step
from afc.solver2d.grid import FlowField, Grid, SolverConfig, divergence, vorticity
from afc.solver2d.poisson import PoissonSolver, solve_poisson
from afc.solver2d.probes import ProbeSampler, default_layout, sample_probes

__all__ = [
    "BodyGeometry", "FlowField", "FlowSolver", "Grid", "ImmersedBody", "JetPair", "PoissonSolver",
    "ProbeSampler", "SolverConfig", "apply_jets", "compute_forces", "default_body", "default_layout",
    "divergence", "net_surface_flux", "sample_probes", "solve_poisson", "step", "vorticity",
]
