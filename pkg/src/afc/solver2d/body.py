"""Cylinder geometry, jet arcs and the direct-forcing masks on the MAC grid."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from afc.errors import ActionRangeError, ConfigError
from afc.solver2d.grid import Grid


@dataclass(frozen=True)
class JetPair:
    """Two jet arcs driven with opposite surface-normal velocities.

    Angles are in radians, measured from the front stagnation line (the
    upstream point of the cylinder) going over the upper surface.
    """

    front_arc: tuple[float, float] = (np.deg2rad(75.0), np.deg2rad(10.0))
    rear_arc: tuple[float, float] = (np.deg2rad(285.0), np.deg2rad(10.0))
    front_velocity: float = 0.0

    def __post_init__(self):
        if not np.isclose(self.front_arc[1], self.rear_arc[1], rtol=0, atol=1e-15):
            raise ConfigError("front and rear jet arcs must have equal widths")
        if self.front_arc[1] <= 0:
            raise ConfigError("jet arc width must be positive")

    @property
    def rear_velocity(self):
        return -self.front_velocity

    def arcs(self):
        return ((self.front_arc, self.front_velocity), (self.rear_arc, self.rear_velocity))


def _arc_interval(arc):
    center, width = arc
    lo = (center - width / 2) % (2 * np.pi)
    return lo, lo + width


def _arcs_overlap(a, b):
    a0, a1 = _arc_interval(a)
    b0, b1 = _arc_interval(b)
    for shift in (-2 * np.pi, 0.0, 2 * np.pi):
        if a0 < b1 + shift and b0 + shift < a1:
            return True
    return False


@dataclass(frozen=True)
class BodyGeometry:
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.5
    jets: tuple[JetPair, ...] = ()
    action_bound: float = 1.0

    def __post_init__(self):
        arcs = [arc for jp in self.jets for arc in (jp.front_arc, jp.rear_arc)]
        for i in range(len(arcs)):
            for j in range(i + 1, len(arcs)):
                if _arcs_overlap(arcs[i], arcs[j]):
                    raise ConfigError(f"jet arcs {i} and {j} overlap")

    @property
    def front_velocities(self):
        return [jp.front_velocity for jp in self.jets]

    def check_inside(self, grid: Grid, clearance=2.0):
        """Raise ConfigError unless the body sits ``clearance`` diameters from every edge."""
        x0, y0 = grid.origin
        lx, ly = grid.extent
        cx, cy = self.center
        r = self.radius
        gap = clearance * 2 * r
        if (cx - r - x0 < gap or x0 + lx - cx - r < gap
                or cy - r - y0 < gap or y0 + ly - cy - r < gap):
            raise ConfigError(
                f"body at {self.center} needs {clearance} D clearance inside "
                f"[{x0}, {x0 + lx}] x [{y0}, {y0 + ly}]"
            )

    def surface_angle(self, stagnation_angle, aoa_deg=0.0):
        """Polar angle (from +x, counter-clockwise) of a point given relative to the front stagnation line."""
        return np.pi + np.deg2rad(aoa_deg) - stagnation_angle


def default_body(n_pairs=1, action_bound=1.0, arc_width_deg=10.0):
    """Cylinder at the origin with ``n_pairs`` identical jet pairs (75 and 285 degrees)."""
    w = np.deg2rad(arc_width_deg)
    if n_pairs < 1:
        return BodyGeometry(action_bound=action_bound)
    if n_pairs == 1:
        jets = (JetPair((np.deg2rad(75.0), w), (np.deg2rad(285.0), w)),)
    else:
        # several pairs share the cylinder: spread them on either side of the default positions
        offsets = np.linspace(-1, 1, n_pairs) * min(30.0, 0.5 * (90.0 - arc_width_deg))
        jets = tuple(
            JetPair((np.deg2rad(75.0 + o), w), (np.deg2rad(285.0 - o), w)) for o in offsets
        )
    return BodyGeometry(jets=jets, action_bound=action_bound)


def apply_jets(body: BodyGeometry, front_velocities) -> BodyGeometry:
    """Return ``body`` with each pair's front jet set to the given velocity.

    The rear jet of each pair carries the negated velocity, so the net
    surface mass flux vanishes.
    """
    vels = [float(v) for v in np.atleast_1d(front_velocities)]
    if len(vels) != len(body.jets):
        raise ConfigError(f"expected {len(body.jets)} jet velocities, got {len(vels)}")
    for k, vel in enumerate(vels):
        if not np.isfinite(vel) or abs(vel) > body.action_bound:
            raise ActionRangeError(
                f"jet pair {k}: velocity {vel} outside [-{body.action_bound}, {body.action_bound}]"
            )
    jets = tuple(replace(jp, front_velocity=vel) for jp, vel in zip(body.jets, vels))
    return replace(body, jets=jets)


def net_surface_flux(body: BodyGeometry):
    """Net volume flux out of the body through all jet arcs (top-hat profile)."""
    total = 0.0
    for jp in body.jets:
        (f_arc, f_vel), (r_arc, r_vel) = jp.arcs()
        total += f_vel * f_arc[1] * body.radius + r_vel * r_arc[1] * body.radius
    return total


def _solid_fraction(x, y, cx, cy, r, hx, hy, nsub):
    """Fraction of the hx-by-hy box around each (x, y) lying inside the circle."""
    offs_x = ((np.arange(nsub) + 0.5) / nsub - 0.5) * hx
    offs_y = ((np.arange(nsub) + 0.5) / nsub - 0.5) * hy
    frac = np.zeros(x.shape)
    for ox in offs_x:
        for oy in offs_y:
            frac += ((x + ox - cx) ** 2 + (y + oy - cy) ** 2 <= r * r)
    return frac / nsub**2


@dataclass
class ImmersedBody:
    """Direct-forcing data for one body on one grid.

    ``phi_u``/``phi_v`` are solid fractions of the control volumes around
    the u and v faces; forcing blends the predicted velocity towards the
    body velocity by this fraction. ``jet_u``/``jet_v`` hold, per pair, the
    face velocity produced by a unit front-jet velocity.
    """

    grid: Grid
    body: BodyGeometry
    aoa_deg: float = 0.0
    nsub: int = 6
    phi_u: np.ndarray = field(init=False, repr=False)
    phi_v: np.ndarray = field(init=False, repr=False)
    jet_u: list = field(init=False, repr=False)
    jet_v: list = field(init=False, repr=False)

    def __post_init__(self):
        g, b = self.grid, self.body
        cx, cy = b.center
        xu, yu = g.u_coords()
        xv, yv = g.v_coords()
        self.phi_u = _solid_fraction(xu, yu, cx, cy, b.radius, g.dx, g.dy, self.nsub)
        self.phi_v = _solid_fraction(xv, yv, cx, cy, b.radius, g.dx, g.dy, self.nsub)
        self.jet_u, self.jet_v = [], []
        for jp in b.jets:
            self.jet_u.append(self._jet_field(xu, yu, self.phi_u, jp, axis=0))
            self.jet_v.append(self._jet_field(xv, yv, self.phi_v, jp, axis=1))

    def _jet_field(self, x, y, phi, jp: JetPair, axis):
        b, g = self.body, self.grid
        h = max(g.dx, g.dy)
        dx, dy = x - b.center[0], y - b.center[1]
        r = np.hypot(dx, dy)
        theta = np.arctan2(dy, dx)
        shell = (phi > 0) & (r >= b.radius - 1.5 * h) & (r <= b.radius + h)
        normal = (dx if axis == 0 else dy) / np.where(r > 0, r, 1.0)
        out = np.zeros(x.shape)
        for sign, arc in ((1.0, jp.front_arc), (-1.0, jp.rear_arc)):
            center = b.surface_angle(arc[0], self.aoa_deg)
            dtheta = np.angle(np.exp(1j * (theta - center)))
            in_arc = shell & (np.abs(dtheta) <= arc[1] / 2)
            out += sign * np.where(in_arc, normal, 0.0)
        return out

    def body_velocity(self, body: BodyGeometry | None = None):
        """Face velocities imposed inside the body for the current jet settings."""
        body = self.body if body is None else body
        ub = np.zeros_like(self.phi_u)
        vb = np.zeros_like(self.phi_v)
        for vel, gu, gv in zip(body.front_velocities, self.jet_u, self.jet_v):
            if vel != 0.0:
                ub += vel * gu
                vb += vel * gv
        return ub, vb

    def inside(self, x, y):
        cx, cy = self.body.center
        return (x - cx) ** 2 + (y - cy) ** 2 < self.body.radius**2
