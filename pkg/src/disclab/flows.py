"""Hamiltonian flows on the disc and the path-space metrics.

Sign convention: Omega = dq^dp and i_{X_H} Omega = dH, so
X_H = (dH/dp, -dH/dq).  Flows are integrated with classical RK4 on the
centered-difference vector field; symplecticity is monitored, not
enforced.  Points starting outside the support radius never move.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fields import ScalarTimeField, SeparableBump, field_sum
from .grids import GridField2D, square_grid

DEFAULT_FD_WIDTH = 1e-4


class FlowEscapeError(RuntimeError):
    """A trajectory left the region where its field is defined."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class NewtonError(RuntimeError):
    """Newton inversion stalled; carries the offending target point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


# ---------------------------------------------------------------------------
# vector field and point integration


def vector_field(H, t, points, h_d=DEFAULT_FD_WIDTH):
    """X_H = (dH/dp, -dH/dq) by centered differences of width h_d."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ex = np.array([h_d, 0.0])
    ey = np.array([0.0, h_d])
    vq = (H(t, pts + ey) - H(t, pts - ey)) / (2.0 * h_d)
    vp = -(H(t, pts + ex) - H(t, pts - ex)) / (2.0 * h_d)
    out = np.stack([vq, vp], axis=-1)
    return out.reshape(np.shape(points))


def _live_mask(H, pts):
    if H.support_radius is None:
        return np.ones(pts.shape[0], dtype=bool)
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return r2 < H.support_radius**2


def _rk4_generic(H, pts, t0, dt, nsteps, h_d):
    """Vectorized RK4 on the generic evaluator path; pts modified in place."""
    live = _live_mask(H, pts)
    x = pts[live].copy()
    half = 0.5 * dt
    sixth = dt / 6.0
    coverage = getattr(H, "coverage_extent", None)
    for k in range(nsteps):
        t = t0 + k * dt
        k1 = vector_field(H, t, x, h_d)
        k2 = vector_field(H, t + half, x + half * k1, h_d)
        k3 = vector_field(H, t + half, x + half * k2, h_d)
        k4 = vector_field(H, t + dt, x + dt * k3, h_d)
        x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if coverage is not None:
            r = np.max(np.abs(x))
            if r > coverage:
                raise FlowEscapeError(
                    f"trajectory left the grid coverage |x| <= {coverage} at t = {t + dt}",
                    last_state=x,
                )
    pts[live] = x
    return pts


def _rk4_bump(H, pts, t0, dt, nsteps, h_d):
    """Dispatch a separable bump to the selected kernel backend."""
    levels = t0 + 0.5 * dt * np.arange(2 * nsteps + 1)
    tau = np.array([H.tau_at(t) for t in levels])
    if H.center is None:
        cx = np.zeros_like(tau)
        cy = np.zeros_like(tau)
    else:
        centers = np.array([H.center_at(t) for t in levels])
        cx = np.ascontiguousarray(centers[:, 0])
        cy = np.ascontiguousarray(centers[:, 1])
    return kernels.rk4_bump_flow(
        pts, dt, nsteps, h_d, H.amp, H.rho, H.m, tau, cx, cy, H.support_radius
    )


def integrate_points(H, t0, t1, points, dt=1e-3, h_d=DEFAULT_FD_WIDTH):
    """Advance an (N, 2) cloud from time t0 to t1 (either direction)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    pts = np.array(points, dtype=np.float64, order="C", ndmin=2, copy=True)
    if t1 == t0:
        return pts
    nsteps = max(1, round(abs(t1 - t0) / dt))
    step = (t1 - t0) / nsteps
    if isinstance(H, SeparableBump):
        _rk4_bump(H, pts, t0, step, nsteps, h_d)
    else:
        _rk4_generic(H, pts, t0, step, nsteps, h_d)
    return pts


def integrate_flow(H, t0, t1, x0, dt=1e-3, h_d=DEFAULT_FD_WIDTH):
    """Hamiltonian trajectory endpoint for a single starting point."""
    out = integrate_points(H, t0, t1, np.asarray(x0, dtype=np.float64)[None, :], dt, h_d)
    return out[0]


# ---------------------------------------------------------------------------
# PlaneMap


class PlaneMap:
    """A grid-sampled area-preserving map of the plane, identity outside support."""

    def __init__(self, grid_x, grid_y, support_radius, jacobian_tolerance=1e-5,
                 inverse_grids=None):
        self.grid_x = grid_x
        self.grid_y = grid_y
        self.support_radius = float(support_radius)
        self.jacobian_tolerance = float(jacobian_tolerance)
        self._inverse_grids = inverse_grids
        self._jac_grids = None

    @property
    def template(self):
        return self.grid_x

    @classmethod
    def identity(cls, grid, support_radius=0.8):
        qx, qy = grid.nodes()
        return cls(grid.with_values(qx), grid.with_values(qy), support_radius)

    @classmethod
    def from_function(cls, grid, fn, support_radius, **kw):
        qx, qy = grid.nodes()
        pts = np.stack([qx, qy], axis=-1)
        img = fn(pts)
        return cls(grid.with_values(img[..., 0]), grid.with_values(img[..., 1]),
                   support_radius, **kw)

    def __call__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        out = np.stack([self.grid_x(pts), self.grid_y(pts)], axis=-1)
        r = np.hypot(pts[..., 0], pts[..., 1])
        fixed = r >= self.support_radius
        return np.where(fixed[..., None], pts, out)

    def node_images(self):
        return self.grid_x.values, self.grid_y.values

    def displacement_norm(self):
        """Sup over grid nodes of |phi(x) - x|."""
        qx, qy = self.grid_x.nodes()
        return float(
            np.max(np.hypot(self.grid_x.values - qx, self.grid_y.values - qy))
        )

    # -- jacobian ----------------------------------------------------------

    def jacobian_at_nodes(self):
        """d(phi) at interior nodes by 4th-order centered differences.

        Returns arrays (J11, J12, J21, J22) on the full grid (2nd-order
        stencils fill the two-cell border, where the map is the identity
        for every built-in family anyway).
        """
        h = self.grid_x.spacing

        def deriv(vals, axis):
            d = np.gradient(vals, h, axis=axis, edge_order=2)
            core = (np.roll(vals, -2, axis) - 8 * np.roll(vals, -1, axis)
                    + 8 * np.roll(vals, 1, axis) - np.roll(vals, 2, axis)) / (-12.0 * h)
            sl = [slice(None)] * 2
            sl[axis] = slice(2, -2)
            d[tuple(sl)] = core[tuple(sl)]
            return d

        j11 = deriv(self.grid_x.values, 0)
        j12 = deriv(self.grid_x.values, 1)
        j21 = deriv(self.grid_y.values, 0)
        j22 = deriv(self.grid_y.values, 1)
        return j11, j12, j21, j22

    def det_jacobian(self):
        j11, j12, j21, j22 = self.jacobian_at_nodes()
        return j11 * j22 - j12 * j21

    def jacobian_defect(self):
        """Max |det d(phi) - 1| over interior nodes inside the unit disc."""
        det = self.det_jacobian()
        qx, qy = self.grid_x.nodes()
        inside = np.hypot(qx, qy) <= 1.0
        inside[:2, :] = inside[-2:, :] = False
        inside[:, :2] = inside[:, -2:] = False
        return float(np.max(np.abs(det[inside] - 1.0)))

    def _jacobian_grids(self):
        if self._jac_grids is None:
            j11, j12, j21, j22 = self.jacobian_at_nodes()
            mk = self.grid_x.with_values
            self._jac_grids = (mk(j11), mk(j12), mk(j21), mk(j22))
        return self._jac_grids

    # -- inversion ----------------------------------------------------------

    def newton_invert(self, targets, seeds=None, tol=1e-10, max_iter=50):
        """Solve phi(y) = target for each target by damped Newton."""
        tgt = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        y = np.array(tgt if seeds is None else np.atleast_2d(seeds), dtype=np.float64)
        g11, g12, g21, g22 = self._jacobian_grids()
        converged = False
        for _ in range(max_iter):
            res = self(y) - tgt
            err = np.hypot(res[:, 0], res[:, 1])
            active = err > tol
            if not active.any():
                converged = True
                break
            ya = y[active]
            ra = res[active]
            a11 = g11(ya)
            a12 = g12(ya)
            a21 = g21(ya)
            a22 = g22(ya)
            det = a11 * a22 - a12 * a21
            bad = np.abs(det) < 1e-14
            if bad.any():
                idx = np.nonzero(active)[0][np.nonzero(bad)[0][0]]
                raise NewtonError(
                    f"singular jacobian while inverting at target {tgt[idx]}",
                    point=tgt[idx],
                )
            dx = (a22 * ra[:, 0] - a12 * ra[:, 1]) / det
            dy = (-a21 * ra[:, 0] + a11 * ra[:, 1]) / det
            step = np.stack([dx, dy], axis=-1)
            # damp long steps to stay in the interpolation region
            norm = np.hypot(step[:, 0], step[:, 1])
            lam = np.where(norm > 0.25, 0.25 / np.maximum(norm, 1e-300), 1.0)
            y[active] = ya - lam[:, None] * step
        if not converged:
            res = self(y) - tgt
            err = np.hypot(res[:, 0], res[:, 1])
            if np.max(err) > max(tol, 1e-8):
                idx = int(np.argmax(err))
                raise NewtonError(
                    f"Newton stalled at target {tgt[idx]} (residual {err[idx]:.3e})",
                    point=tgt[idx],
                )
        return y.reshape(np.shape(targets))

    def inverse(self):
        """Inverse map, from stored backward-flow grids or Newton inversion."""
        if self._inverse_grids is not None:
            ix, iy = self._inverse_grids
            return PlaneMap(ix, iy, self.support_radius, self.jacobian_tolerance,
                            inverse_grids=(self.grid_x, self.grid_y))
        grid = self.template
        qx, qy = grid.nodes()
        nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
        r = np.hypot(nodes[:, 0], nodes[:, 1])
        inner = r < self.support_radius
        sol = nodes.copy()
        sol[inner] = self.newton_invert(nodes[inner])
        ix = grid.with_values(sol[:, 0].reshape(qx.shape))
        iy = grid.with_values(sol[:, 1].reshape(qx.shape))
        return PlaneMap(ix, iy, self.support_radius, self.jacobian_tolerance,
                        inverse_grids=(self.grid_x, self.grid_y))

    def compose(self, other):
        """self after other, sampled on other's grid."""
        grid = other.template
        qx, qy = grid.nodes()
        mid = other(np.stack([qx, qy], axis=-1))
        img = self(mid)
        support = max(self.support_radius, other.support_radius)
        return PlaneMap(grid.with_values(img[..., 0]), grid.with_values(img[..., 1]),
                        support, self.jacobian_tolerance)

    # -- serialization -------------------------------------------------------

    def save(self, prefix):
        import json

        self.grid_x.to_csv(f"{prefix}_x.csv")
        self.grid_y.to_csv(f"{prefix}_y.csv")
        with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "support_radius": self.support_radius,
                    "jacobian_tolerance": self.jacobian_tolerance,
                    "n": self.grid_x.n,
                },
                fh,
            )

    @classmethod
    def load(cls, prefix):
        import json

        gx = GridField2D.from_csv(f"{prefix}_x.csv")
        gy = GridField2D.from_csv(f"{prefix}_y.csv")
        with open(f"{prefix}.json", encoding="utf-8") as fh:
            meta = json.load(fh)
        return cls(gx, gy, meta["support_radius"], meta["jacobian_tolerance"])


def flow_map(H, t, grid=None, dt=1e-3, h_d=DEFAULT_FD_WIDTH, with_inverse=False):
    """Sample x -> phi_H^t(x) on the grid as a PlaneMap."""
    if grid is None:
        grid = square_grid(257)
    support = H.support_radius if H.support_radius is not None else np.inf
    qx, qy = grid.nodes()
    nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    img = integrate_points(H, 0.0, t, nodes, dt, h_d)
    fwd_x = grid.with_values(img[:, 0].reshape(qx.shape))
    fwd_y = grid.with_values(img[:, 1].reshape(qx.shape))
    inv_grids = None
    if with_inverse:
        back = integrate_points(H, t, 0.0, nodes, dt, h_d)
        inv_grids = (
            grid.with_values(back[:, 0].reshape(qx.shape)),
            grid.with_values(back[:, 1].reshape(qx.shape)),
        )
    return PlaneMap(fwd_x, fwd_y, support, inverse_grids=inv_grids)


@dataclass
class HamiltonianPath:
    """phi_H^t sampled at a list of times (maps[0] is the identity)."""

    hamiltonian: object
    time_samples: list
    maps: list

    def map_at(self, t):
        idx = int(np.argmin(np.abs(np.asarray(self.time_samples) - t)))
        if abs(self.time_samples[idx] - t) > 1e-12:
            raise KeyError(f"time {t} not among the stored samples")
        return self.maps[idx]


def hamiltonian_path(H, nt=17, grid=None, dt=1e-3, h_d=DEFAULT_FD_WIDTH,
                     with_inverse=False):
    """Integrate the whole path once, storing maps at nt equi-spaced times."""
    if grid is None:
        grid = square_grid(257)
    support = H.support_radius if H.support_radius is not None else np.inf
    times = np.linspace(0.0, 1.0, nt)
    qx, qy = grid.nodes()
    nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    pts = nodes.copy()
    maps = [PlaneMap.identity(grid, support)]
    for k in range(nt - 1):
        pts = integrate_points(H, times[k], times[k + 1], pts, dt, h_d)
        inv_grids = None
        if with_inverse:
            back = integrate_points(H, times[k + 1], 0.0, nodes.copy(), dt, h_d)
            inv_grids = (
                grid.with_values(back[:, 0].reshape(qx.shape)),
                grid.with_values(back[:, 1].reshape(qx.shape)),
            )
        maps.append(
            PlaneMap(
                grid.with_values(pts[:, 0].reshape(qx.shape)),
                grid.with_values(pts[:, 1].reshape(qx.shape)),
                support,
                inverse_grids=inv_grids,
            )
        )
    return HamiltonianPath(H, list(times), maps)


# ---------------------------------------------------------------------------
# metrics


def _simpson_weights(n):
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of samples >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def osc_on_grid(H, t, grid):
    """max - min of H(t, .) over grid nodes in the closed unit disc."""
    qx, qy = grid.nodes()
    pts = np.stack([qx, qy], axis=-1)
    vals = H(t, pts)
    inside = np.hypot(qx, qy) <= 1.0
    v = vals[inside]
    return float(np.max(v) - np.min(v))


def hofer_length(H, grid=None, nt=129):
    """Hofer length: time integral of the oscillation of H_t (Simpson)."""
    if grid is None:
        grid = square_grid(257)
    times = np.linspace(0.0, 1.0, nt)
    oscs = np.array([osc_on_grid(H, t, grid) for t in times])
    w = _simpson_weights(nt)
    return float(np.sum(w * oscs) * (times[1] - times[0]))


def _c0_one_sided(phi, psi):
    grid = phi.template
    qx, qy = grid.nodes()
    inside = np.hypot(qx, qy) <= 1.0
    pxv, pyv = phi.node_images()
    pts = np.stack([qx, qy], axis=-1)
    qs = psi(pts)
    return float(
        np.max(np.hypot((pxv - qs[..., 0])[inside], (pyv - qs[..., 1])[inside]))
    )


def c0_distance(phi, psi, with_inverses=True):
    """Symmetrized sup distance max(d(phi,psi), d(phi^-1, psi^-1))."""
    d = max(_c0_one_sided(phi, psi), _c0_one_sided(psi, phi))
    if with_inverses:
        phi_inv = phi.inverse()
        psi_inv = psi.inverse()
        d = max(d, _c0_one_sided(phi_inv, psi_inv), _c0_one_sided(psi_inv, phi_inv))
    return d


def ham_distance(H, K, grid=None, nt=17, dt=1e-3):
    """d_ham = C0 path distance + Hofer length of the difference path."""
    from .calabi import compose_dev

    if grid is None:
        grid = square_grid(257)
    path_h = hamiltonian_path(H, nt, grid, dt, with_inverse=True)
    path_k = hamiltonian_path(K, nt, grid, dt, with_inverse=True)
    c0 = max(
        c0_distance(mh, mk)
        for mh, mk in zip(path_h.maps, path_k.maps)
    )
    diff = compose_dev(H, K, flows=(path_h, path_k))
    return c0 + hofer_length(diff, grid, nt=2 * nt - 1)
