"""Pressure probes: bilinear sampling of the cell-centred pressure."""
from __future__ import annotations

import numpy as np

from afc.errors import LayoutError
from afc.solver2d.body import BodyGeometry
from afc.solver2d.grid import FlowField, Grid


def default_layout(body: BodyGeometry | None = None, ring_radii=(0.75, 1.0, 1.5), per_ring=16,
                   rake_x=(1.5, 2.5, 3.5, 4.5, 5.5, 6.5), rake_y=(-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5)):
    """Three rings around the cylinder plus a wake rake: 48 + 42 = 90 probes."""
    cx, cy = body.center if body is not None else (0.0, 0.0)
    pts = []
    for r in ring_radii:
        for k in range(per_ring):
            a = 2 * np.pi * k / per_ring
            pts.append((cx + r * np.cos(a), cy + r * np.sin(a)))
    for x in rake_x:
        for y in rake_y:
            pts.append((cx + x, cy + y))
    return np.array(pts)


class ProbeSampler:
    """Precomputed bilinear weights for a fixed layout on a fixed grid."""

    def __init__(self, grid: Grid, layout, body: BodyGeometry | None = None):
        layout = np.asarray(layout, dtype=float).reshape(-1, 2)
        xc, yc = grid.x_centers(), grid.y_centers()
        self.i0 = np.empty(len(layout), dtype=int)
        self.j0 = np.empty(len(layout), dtype=int)
        self.wx = np.empty(len(layout))
        self.wy = np.empty(len(layout))
        for k, (x, y) in enumerate(layout):
            if not (xc[0] <= x <= xc[-1] and yc[0] <= y <= yc[-1]):
                raise LayoutError(k, f"({x}, {y}) lies outside the sampled domain")
            if body is not None and (x - body.center[0]) ** 2 + (y - body.center[1]) ** 2 <= body.radius**2:
                raise LayoutError(k, f"({x}, {y}) lies inside the body")
            fx = (x - xc[0]) / grid.dx
            fy = (y - yc[0]) / grid.dy
            i = min(int(np.floor(fx)), grid.nx - 2)
            j = min(int(np.floor(fy)), grid.ny - 2)
            self.i0[k], self.j0[k] = i, j
            self.wx[k], self.wy[k] = fx - i, fy - j
        self.layout = layout

    def __len__(self):
        return len(self.layout)

    def sample(self, p):
        i, j, wx, wy = self.i0, self.j0, self.wx, self.wy
        return ((1 - wx) * (1 - wy) * p[i, j] + wx * (1 - wy) * p[i + 1, j]
                + (1 - wx) * wy * p[i, j + 1] + wx * wy * p[i + 1, j + 1])


def sample_probes(field: FlowField, layout, grid: Grid, body: BodyGeometry | None = None):
    return ProbeSampler(grid, layout, body).sample(field.p)
