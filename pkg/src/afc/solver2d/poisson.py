"""Pressure Poisson solvers for the cell-centred 5-point Laplacian.

Two boundary treatments are supported: homogeneous Neumann on all sides and
fully periodic. Both are singular; the solvability condition is enforced by
removing the mean of the right-hand side and the gauge by returning a
zero-mean solution.

Two methods are available. ``spectral`` diagonalises the operator exactly
with DCT-II (Neumann) or FFT (periodic) and is what the time stepper uses.
``pcg`` is a matrix-free Jacobi-preconditioned conjugate gradient.
"""
from __future__ import annotations

import numpy as np
from scipy import fft

from afc.errors import PoissonConvergenceError


def laplacian(phi, dx, dy, bc="neumann"):
    """Apply the 5-point Laplacian with ghost values implied by ``bc``."""
    if bc == "periodic":
        lap = (np.roll(phi, -1, 0) - 2 * phi + np.roll(phi, 1, 0)) / dx**2
        lap += (np.roll(phi, -1, 1) - 2 * phi + np.roll(phi, 1, 1)) / dy**2
        return lap
    padded = np.pad(phi, 1, mode="edge")
    lap = (padded[2:, 1:-1] - 2 * phi + padded[:-2, 1:-1]) / dx**2
    lap += (padded[1:-1, 2:] - 2 * phi + padded[1:-1, :-2]) / dy**2
    return lap


def _eigenvalues(n, h, bc):
    k = np.arange(n)
    if bc == "periodic":
        return (2.0 * np.cos(2.0 * np.pi * k / n) - 2.0) / h**2
    return (2.0 * np.cos(np.pi * k / n) - 2.0) / h**2


class PoissonSolver:
    """Reusable solver for a fixed grid shape and boundary treatment."""

    def __init__(self, shape, dx, dy, bc="neumann", method="spectral", tol=1e-8, max_iter=2000):
        if bc not in ("neumann", "periodic"):
            raise ValueError(f"unknown Poisson boundary treatment {bc!r}")
        if method not in ("spectral", "pcg"):
            raise ValueError(f"unknown Poisson method {method!r}")
        self.shape = tuple(shape)
        self.dx, self.dy = dx, dy
        self.bc = bc
        self.method = method
        self.tol = tol
        self.max_iter = max_iter
        lam = _eigenvalues(shape[0], dx, bc)[:, None] + _eigenvalues(shape[1], dy, bc)[None, :]
        lam[0, 0] = 1.0
        self._inv_lam = 1.0 / lam
        self._inv_lam[0, 0] = 0.0
        self._diag = self._jacobi_diagonal()
        self.last_residual = 0.0
        self.last_iterations = 0

    def _jacobi_diagonal(self):
        nx, ny = self.shape
        diag = np.full(self.shape, 2.0 / self.dx**2 + 2.0 / self.dy**2)
        if self.bc == "neumann":
            diag[0, :] -= 1.0 / self.dx**2
            diag[-1, :] -= 1.0 / self.dx**2
            diag[:, 0] -= 1.0 / self.dy**2
            diag[:, -1] -= 1.0 / self.dy**2
        return diag

    def residual(self, phi, rhs):
        return np.max(np.abs(laplacian(phi, self.dx, self.dy, self.bc) - (rhs - rhs.mean())))

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != self.shape:
            raise ValueError(f"rhs shape {rhs.shape} does not match solver shape {self.shape}")
        if self.method == "spectral":
            phi = self._solve_spectral(rhs)
            res = self.residual(phi, rhs)
            self.last_iterations = 1
            if not res <= self.tol:
                raise PoissonConvergenceError("spectral Poisson solve above tolerance", res, [res])
        else:
            phi, res = self._solve_pcg(rhs)
        self.last_residual = res
        return phi

    def _solve_spectral(self, rhs):
        if self.bc == "periodic":
            phi = fft.ifft2(fft.fft2(rhs) * self._inv_lam).real
        else:
            phi = fft.idctn(fft.dctn(rhs, type=2, norm="ortho") * self._inv_lam, type=2, norm="ortho")
        return phi - phi.mean()

    def _solve_pcg(self, rhs):
        # solve -L phi = -b, which is symmetric positive semi-definite
        b = -(rhs - rhs.mean())
        phi = np.zeros_like(b)
        r = b.copy()
        z = r / self._diag
        z -= z.mean()
        d = z.copy()
        rz = np.vdot(r, z)
        history = []
        for it in range(1, self.max_iter + 1):
            ad = -laplacian(d, self.dx, self.dy, self.bc)
            denom = np.vdot(d, ad)
            if denom == 0.0:
                break
            alpha = rz / denom
            phi += alpha * d
            r -= alpha * ad
            res = np.max(np.abs(r))
            history.append(res)
            if res <= self.tol:
                break
            z = r / self._diag
            z -= z.mean()
            rz_new = np.vdot(r, z)
            d = z + (rz_new / rz) * d
            rz = rz_new
        self.last_iterations = it
        phi -= phi.mean()
        res = self.residual(phi, rhs)
        if not res <= self.tol:
            raise PoissonConvergenceError(
                f"PCG did not converge in {self.max_iter} iterations", res, history[-10:]
            )
        return phi, res


def solve_poisson(rhs, tol=1e-8, max_iter=2000, dx=1.0, dy=1.0, bc="neumann", method="spectral"):
    """Solve ``lap(phi) = rhs - mean(rhs)`` and return the zero-mean ``phi``.

    Raises
    ------
    PoissonConvergenceError
        If the residual max-norm stays above ``tol``.
    """
    rhs = np.asarray(rhs, dtype=float)
    return PoissonSolver(rhs.shape, dx, dy, bc, method, tol, max_iter).solve(rhs)
