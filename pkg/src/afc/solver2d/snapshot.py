"""Field snapshots.

``snapshot_<time>.dat`` is plain text: five header lines (nx, ny, dx, dy,
time) followed by one row per cell, row-major in (i, j), with columns
``x y u v p vorticity`` at the cell centre. Cell-centred velocities do not
determine the staggered state, so restartable states go to a separate
``.npz`` holding the face arrays.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from afc.solver2d.grid import FlowField, Grid, cell_velocity, vorticity


def snapshot_name(time):
    return f"snapshot_{time:.4f}.dat"


def write_snapshot(directory, grid: Grid, field: FlowField):
    path = Path(directory) / snapshot_name(field.time)
    uc, vc = cell_velocity(field.u, field.v)
    w = vorticity(grid, field.u, field.v)
    xp, yp = grid.p_coords()
    cols = np.column_stack([a.ravel() for a in (xp, yp, uc, vc, field.p, w)])
    header = (
        f"nx {grid.nx}\nny {grid.ny}\ndx {grid.dx!r}\ndy {grid.dy!r}\ntime {field.time!r}\n"
    )
    with path.open("w") as fh:
        fh.write(header)
        np.savetxt(fh, cols, fmt="%.17g")
    return path


def read_snapshot(path):
    """Return ``(header dict, columns dict)`` with columns reshaped to (nx, ny)."""
    with Path(path).open() as fh:
        header = {}
        for _ in range(5):
            key, val = fh.readline().split()
            header[key] = int(val) if key in ("nx", "ny") else float(val)
        data = np.loadtxt(fh, ndmin=2)
    shape = (header["nx"], header["ny"])
    names = ("x", "y", "u", "v", "p", "vorticity")
    return header, {n: data[:, k].reshape(shape) for k, n in enumerate(names)}


def save_state(path, field: FlowField):
    np.savez(path, u=field.u, v=field.v, p=field.p, time=field.time)


def load_state(path) -> FlowField:
    with np.load(path) as z:
        return FlowField(z["u"].copy(), z["v"].copy(), z["p"].copy(), float(z["time"]))
