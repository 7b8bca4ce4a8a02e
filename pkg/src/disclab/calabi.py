"""The Calabi invariant, by both definitions, and path algebra.

Definition via past history: Cal^path(H) = int_0^1 int H(t,x) dA dt.
Definition via a primitive: with alpha = -p dq, the one-form
beta = phi^*alpha - alpha is closed, beta = dh for a compactly supported
h, and Cal(phi) = (1/2) int h dA.  With the sign convention of `flows`
(X_H = (H_p, -H_q)) the two agree with constant exactly 1.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .fields import ScalarTimeField
from .flows import _simpson_weights
from .grids import DiscDomain, GridField2D, disc_weights, square_grid


def _check_supported(H, grid):
    if H.support_radius is None:
        raise ValueError("Calabi quadrature needs a compactly supported Hamiltonian")
    lo, hi = grid.extent
    margin = grid.spacing
    if H.support_radius >= min(-lo[0], -lo[1], hi[0], hi[1]) - margin:
        raise ValueError(
            f"support radius {H.support_radius} reaches the grid boundary"
        )


def spatial_integral(H, t, grid):
    """int H(t, .) dA by cell sum (valid: the field vanishes at the grid edge)."""
    qx, qy = grid.nodes()
    pts = np.stack([qx, qy], axis=-1)
    return float(np.sum(H(t, pts)) * grid.spacing**2)


def cal_path(H, grid=None, nt=129):
    """Cal^path: double quadrature of H over time and the disc."""
    if grid is None:
        grid = square_grid(257)
    _check_supported(H, grid)
    times = np.linspace(0.0, 1.0, nt)
    vals = np.array([spatial_integral(H, t, grid) for t in times])
    w = _simpson_weights(nt)
    return float(np.sum(w * vals) * (times[1] - times[0]))


# ---------------------------------------------------------------------------
# Definition 1.1 via the primitive alpha = -p dq


@dataclass
class CalabiReport:
    cal_def1: float
    cal_path: float
    primitive_residual: float
    agreement_error: float
    path_independence: float = 0.0
    quadrature_error: float = 0.0
    grid_n: int = 0

    def to_json(self, path=None):
        payload = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(payload)
        return payload


def pullback_defect_form(phi, gauge=None):
    """Components of beta = phi^*alpha - alpha on the map's grid.

    alpha = -p dq; optionally alpha is replaced by alpha + d(gauge) for a
    compactly supported gauge function (the value of Cal must not move).
    """
    grid = phi.template
    qx, qy = grid.nodes()
    P = phi.grid_y.values
    j11, j12, _, _ = phi.jacobian_at_nodes()   # dQ/dq, dQ/dp
    b1 = -P * j11 + qy
    b2 = -P * j12
    if gauge is not None:
        pts = np.stack([qx, qy], axis=-1)
        img = np.stack([phi.grid_x.values, phi.grid_y.values], axis=-1)
        diff = gauge(img) - gauge(pts)
        g1, g2 = np.gradient(diff, grid.spacing, edge_order=2)
        b1 = b1 + g1
        b2 = b2 + g2
    return b1, b2


def plaquette_circulation(b1, b2, spacing):
    """Loop integrals of (b1, b2) around every grid cell (counterclockwise)."""
    bottom = 0.5 * (b1[:-1, :-1] + b1[1:, :-1])
    top = 0.5 * (b1[:-1, 1:] + b1[1:, 1:])
    left = 0.5 * (b2[:-1, :-1] + b2[:-1, 1:])
    right = 0.5 * (b2[1:, :-1] + b2[1:, 1:])
    return spacing * (bottom + right - top - left)


def primitive_and_cal_def1(phi, H=None, cal_path_value=None, residual_tol=1e-3,
                           gauge=None):
    """Cal by Definition via the primitive, with all diagnostics.

    Builds beta = phi^*alpha - alpha, checks closedness, integrates it
    along grid rays from the boundary (where h = 0) and returns
    Cal = (1/2) int h.  If H or cal_path_value is given the agreement
    error against the path definition is reported.
    """
    grid = phi.template
    h_sp = grid.spacing
    b1, b2 = pullback_defect_form(phi, gauge=gauge)
    circ = plaquette_circulation(b1, b2, h_sp)
    residual = float(np.max(np.abs(circ)))
    if residual > residual_tol:
        raise ValueError(
            f"primitive defect form is not closed enough "
            f"(residual {residual:.3e} > {residual_tol:.3e}); "
            "the map is not area-preserving at this resolution"
        )
    # rays from the left edge (outside the support, h = 0 there)
    h_rows = cumulative_trapezoid(b1, dx=h_sp, axis=0, initial=0.0)
    # independent family: rays from the bottom edge
    h_cols = cumulative_trapezoid(b2, dx=h_sp, axis=1, initial=0.0)
    path_independence = float(np.max(np.abs(h_rows - h_cols)))
    cal1 = 0.5 * float(np.sum(h_rows)) * h_sp * h_sp
    # second quadrature level from the decimated grid, for the error estimate
    cal1_coarse = 0.5 * float(np.sum(h_rows[::2, ::2])) * (2 * h_sp) ** 2
    quad_err = abs(cal1 - cal1_coarse) / 3.0
    if cal_path_value is None and H is not None:
        cal_path_value = cal_path(H)
    cal_p = cal1 if cal_path_value is None else cal_path_value
    return CalabiReport(
        cal_def1=cal1,
        cal_path=cal_p,
        primitive_residual=residual,
        agreement_error=abs(cal1 - cal_p),
        path_independence=path_independence,
        quadrature_error=quad_err,
        grid_n=grid.n,
    )


def primitive_potential(phi):
    """The function h with dh = phi^*alpha - alpha, as a grid field."""
    grid = phi.template
    b1, _ = pullback_defect_form(phi)
    h_rows = cumulative_trapezoid(b1, dx=grid.spacing, axis=0, initial=0.0)
    return grid.with_values(h_rows)


# ---------------------------------------------------------------------------
# normalization on the sphere model


@dataclass
class NormalizedField:
    """H - c(t) on the disc, == -c(t) on the identity region of the sphere."""

    base: ScalarTimeField
    domain: DiscDomain
    grid: GridField2D
    _cache: dict = field(default_factory=dict, repr=False)

    def offset(self, t):
        key = round(float(t), 12)
        if key not in self._cache:
            self._cache[key] = (
                spatial_integral(self.base, key, self.grid) / self.domain.sphere_volume
            )
        return self._cache[key]

    def __call__(self, t, points):
        return self.base(t, points) - self.offset(t)

    def offset_integral(self, t1=1.0, nt=129):
        """int_0^t c(s) ds by Simpson; equals Cal/vol at t = 1."""
        times = np.linspace(0.0, t1, nt)
        vals = np.array([self.offset(t) for t in times])
        w = _simpson_weights(nt)
        return float(np.sum(w * vals) * (times[1] - times[0]))

    def sphere_mean(self, t):
        """Mean over the sphere model; 0 by construction."""
        disc = spatial_integral(self.base, t, self.grid) - self.offset(t) * (
            math.pi * self.domain.radius**2
        )
        lower = -self.offset(t) * self.domain.identity_area
        return (disc + lower) / self.domain.sphere_volume

    @property
    def support_radius(self):
        return self.base.support_radius

    @property
    def smoothness_order(self):
        return self.base.smoothness_order


def normalize_on_sphere(H, domain=None, grid=None):
    if domain is None:
        domain = DiscDomain(support_radius=H.support_radius or 0.8)
    if grid is None:
        grid = square_grid(257)
    _check_supported(H, grid)
    return NormalizedField(H, domain, grid)


# ---------------------------------------------------------------------------
# path algebra


def inverse_dev(H, path):
    """Hamiltonian of the inverse path: -H(t, phi_H^t(x))."""

    def evaluator(t, pts):
        phi_t = _map_interp(path, t)
        return -H(t, phi_t(pts))

    return ScalarTimeField(evaluator, H.support_radius, H.smoothness_order)


def _map_interp(path, t):
    """Map at time t, linearly interpolated between stored path samples."""
    times = np.asarray(path.time_samples)
    idx = np.searchsorted(times, t)
    idx = min(max(idx, 1), len(times) - 1)
    t0, t1 = times[idx - 1], times[idx]
    w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    m0, m1 = path.maps[idx - 1], path.maps[idx]

    def apply(pts):
        return (1.0 - w) * m0(pts) + w * m1(pts)

    return apply


def compose_dev(H, G, flows):
    """Hamiltonian of t -> phi_H^t o (phi_G^t)^-1.

    flows = (path_H, path_G) where path_H carries inverse maps.
    """
    path_h, path_g = flows
    support = max(
        (f for f in (H.support_radius, G.support_radius) if f is not None),
        default=None,
    )

    def evaluator(t, pts):
        times = np.asarray(path_h.time_samples)
        idx = int(np.argmin(np.abs(times - t)))
        lam_inv = path_h.maps[idx].inverse()
        mu = path_g.maps[idx]
        return H(t, pts) - G(t, mu(lam_inv(pts)))

    return ScalarTimeField(
        evaluator, support, min(H.smoothness_order, G.smoothness_order)
    )


def flow_normalization_check(nf, path, nt=None):
    """Max over stored times of the sphere integral of F(t, phi^t(.)).

    Measure preservation makes each integral the sphere mean of the
    normalized field, which vanishes.
    """
    grid = path.maps[0].template
    w = disc_weights(grid)
    qx, qy = grid.nodes()
    pts = np.stack([qx, qy], axis=-1)
    worst = 0.0
    for t, phi in zip(path.time_samples, path.maps):
        vals = nf(t, phi(pts))
        disc_part = float(np.sum(w * vals))
        lower_part = -nf.offset(t) * nf.domain.identity_area
        worst = max(worst, abs(disc_part + lower_part))
    return worst
