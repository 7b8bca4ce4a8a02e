"""Graphicality of area-preserving maps in the flat chart.

A map phi is graphical when its graph, written in the midpoint chart,
projects one-to-one onto the diagonal.  The working criterion is the
midpoint map kappa(y) = (y + phi(y)) / 2: phi is graphical iff kappa is
a diffeomorphism, certified here by a determinant scan plus a sampled
collision probe.  The graph of a graphical Hamiltonian map is the image
of a closed one-form, recovered node-by-node by Newton inversion of
kappa; its potential is the generating function of the map.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .chart import jmap
from .calabi import plaquette_circulation
from .flows import NewtonError, PlaneMap
from .grids import GridField2D, square_grid


# ---------------------------------------------------------------------------
# star-shapedness determinant


@dataclass(frozen=True)
class SymmetricMatrix2:
    """[[a, c], [c, b]] -- the Hessian-type data of the star-shape bound."""

    a: float
    b: float
    c: float

    def matrix(self):
        return np.array([[self.a, self.c], [self.c, self.b]])

    def jmatrix(self):
        """j A with j = [[0, -1], [1, 0]]: an element of sp(2)."""
        return np.array([[-self.c, -self.b], [self.a, self.c]])


def starshape_det(A, r, self_check=True):
    """det(I - r jA) = 1 + r^2 (ab - c^2), by closed form.

    The direct 2x2 expansion is evaluated as a self-check; a mismatch
    beyond round-off raises.
    """
    closed = 1.0 + r * r * (A.a * A.b - A.c * A.c)
    if self_check:
        M = np.eye(2) - r * A.jmatrix()
        direct = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(direct - closed) > 1e-13 * max(1.0, abs(closed)):
            raise AssertionError(
                f"determinant expansion mismatch: {direct} vs {closed}"
            )
    return closed


# ---------------------------------------------------------------------------
# midpoint map and graphicality


def midpoint_map(phi, a=1.0):
    """kappa_a(y) = (y + a phi(y/a)) / 2 on a grid adapted to the scale.

    At a = 1 this is the midpoint map of phi itself on phi's own grid;
    for a < 1 the grid shrinks with the rescaled support so that node
    y = a * y1 corresponds exactly to base node y1.
    """
    grid = phi.template
    if a == 1.0:
        target = grid
    else:
        if not 0.0 < a < 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {a}")
        lo, hi = grid.extent
        target = square_grid(grid.n, extent=a * hi[0])
    qx, qy = target.nodes()
    y = np.stack([qx, qy], axis=-1)
    img = a * phi(y / a)
    mid = 0.5 * (y + img)
    return PlaneMap(
        target.with_values(mid[..., 0]),
        target.with_values(mid[..., 1]),
        a * phi.support_radius,
    )


def _min_det_inside(kappa):
    det = kappa.det_jacobian()
    qx, qy = kappa.template.nodes()
    inside = np.hypot(qx, qy) <= kappa.support_radius
    inside[:2, :] = inside[-2:, :] = False
    inside[:, :2] = inside[:, -2:] = False
    if not inside.any():
        return 1.0
    return float(np.min(det[inside]))


def is_graphical(phi, delta=1e-3, probe=True):
    """(graphical?, min det d(kappa)) by determinant scan + collision probe.

    The probe hashes the kappa-images of the grid nodes into half-cell
    bins and fails if two nodes with distant preimages collide -- a
    sampled certificate of global injectivity on top of the local
    immersion criterion.
    """
    kappa = midpoint_map(phi, 1.0)
    min_det = _min_det_inside(kappa)
    if min_det <= delta:
        return False, min_det
    if probe and _collision_probe(kappa):
        return False, min_det
    return True, min_det


def _collision_probe(kappa):
    grid = kappa.template
    h = grid.spacing
    qx, qy = grid.nodes()
    ix, iy = kappa.node_images()
    r = np.hypot(qx, qy)
    sel = r < kappa.support_radius
    src = np.stack([qx[sel], qy[sel]], axis=-1)
    img = np.stack([ix[sel], iy[sel]], axis=-1)
    bins = {}
    cell = np.floor(img / (0.5 * h)).astype(np.int64)
    for k in range(src.shape[0]):
        key = (int(cell[k, 0]), int(cell[k, 1]))
        prev = bins.setdefault(key, k)
        if prev != k:
            gap = np.hypot(*(src[prev] - src[k]))
            if gap > 2.0 * h:
                return True
    return False


# ---------------------------------------------------------------------------
# the closed one-form of a graphical map


@dataclass
class OneFormField:
    """One-form alpha = a1 dq1 + a2 dq2 on the chart, zero outside the support."""

    a1: GridField2D
    a2: GridField2D
    support_radius: float

    def __call__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        out = np.stack([self.a1(pts), self.a2(pts)], axis=-1)
        r = np.hypot(pts[..., 0], pts[..., 1])
        return np.where((r >= self.support_radius)[..., None], 0.0, out)

    @property
    def template(self):
        return self.a1

    def closedness_residual(self):
        """Max loop integral of alpha around a grid cell (d alpha = 0)."""
        circ = plaquette_circulation(
            self.a1.values, self.a2.values, self.a1.spacing
        )
        return float(np.max(np.abs(circ)))

    def _node_curl(self):
        """d alpha at interior nodes by 4th-order centered stencils."""
        h = self.a1.spacing

        def deriv(vals, axis):
            return (
                np.roll(vals, -2, axis) - 8.0 * np.roll(vals, -1, axis)
                + 8.0 * np.roll(vals, 1, axis) - np.roll(vals, 2, axis)
            ) / (-12.0 * h)

        curl = deriv(self.a2.values, 0) - deriv(self.a1.values, 1)
        return curl[2:-2, 2:-2]

    def symmetry_defect(self, rng=None, n_pairs=256):
        """Max |<grad_v alpha, w> - <grad_w alpha, v>| over random node pairs.

        For a closed form the gradient matrix of alpha is symmetric; the
        antisymmetric part contracts with (v, w) as d(alpha) times the
        wedge v ^ w, evaluated here at randomly drawn interior nodes with
        random unit directions.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        curl = self._node_curl()
        flat = curl.ravel()
        idx = rng.integers(0, flat.size, size=n_pairs)
        v = rng.normal(size=(n_pairs, 2))
        w = rng.normal(size=(n_pairs, 2))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        wedge = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        return float(np.max(np.abs(flat[idx] * wedge)))


def recover_one_form(phi, delta=1e-3, newton_tol=1e-10):
    """alpha with Image(alpha) = Graph(phi): solve kappa(y) = q per node.

    For each chart node q inside the support, the midpoint equation
    kappa(y) = q is solved by damped Newton (seeded at q); then
    alpha(q) = -j(phi(y) - y).  Rejects non-graphical input.
    """
    ok, min_det = is_graphical(phi, delta)
    if not ok:
        raise ValueError(
            f"map is not graphical (min det d(kappa) = {min_det:.3e} <= {delta})"
        )
    kappa = midpoint_map(phi, 1.0)
    grid = kappa.template
    qx, qy = grid.nodes()
    nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    r = np.hypot(nodes[:, 0], nodes[:, 1])
    inner = r < kappa.support_radius
    y = nodes.copy()
    try:
        y[inner] = kappa.newton_invert(nodes[inner], tol=newton_tol)
    except NewtonError as exc:
        raise NewtonError(
            f"one-form recovery failed at chart node {exc.point}", exc.point
        ) from exc
    y = y.reshape(qx.shape + (2,))
    v = phi(y) - y
    alpha = -jmap(v)
    alpha[np.hypot(qx, qy) >= kappa.support_radius] = 0.0
    return OneFormField(
        grid.with_values(alpha[..., 0]),
        grid.with_values(alpha[..., 1]),
        kappa.support_radius,
    )


def integrate_generating(alpha, base_value=0.0, circulation_tol=5e-4,
                         full_output=False):
    """g with dg = alpha by ray integration from the grid edge.

    g equals base_value on the left edge (outside the support).  The
    column-ray family provides the path-independence monitor.  Rejects
    one-forms whose plaquette circulation exceeds circulation_tol.
    """
    from scipy.integrate import cumulative_trapezoid

    residual = alpha.closedness_residual()
    if residual > circulation_tol:
        raise ValueError(
            f"one-form circulation {residual:.3e} exceeds {circulation_tol:.3e}; "
            "not closed enough to integrate"
        )
    grid = alpha.template
    h = grid.spacing
    g_rows = base_value + cumulative_trapezoid(
        alpha.a1.values, dx=h, axis=0, initial=0.0
    )
    g_cols = base_value + cumulative_trapezoid(
        alpha.a2.values, dx=h, axis=1, initial=0.0
    )
    path_independence = float(np.max(np.abs(g_rows - g_cols)))
    g = grid.with_values(g_rows)
    if full_output:
        return g, {
            "circulation": residual,
            "path_independence": path_independence,
        }
    return g


def family_from_one_form(alpha, r):
    """phi_r with Graph(phi_r) = Image(r alpha), via psi_r(q) = q - (r/2) j alpha(q).

    Inverting psi_r by Newton gives the base point q over each node y;
    the partner point is phi_r(y) = 2q - y.  Errors out if d(psi_r) is
    not orientation-preserving somewhere (the input then violated the
    graphical-isotopy precondition).
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"family parameter must lie in [0, 1], got {r}")
    grid = alpha.template
    qx, qy = grid.nodes()
    q = np.stack([qx, qy], axis=-1)
    av = alpha(q)
    psi_vals = q - 0.5 * r * jmap(av)
    psi = PlaneMap(
        grid.with_values(psi_vals[..., 0]),
        grid.with_values(psi_vals[..., 1]),
        alpha.support_radius,
    )
    min_det = _min_det_inside(psi)
    if min_det <= 0.0:
        raise ValueError(
            f"base map of the isotopy fails to be an immersion "
            f"(min det d(psi_r) = {min_det:.3e} at r = {r}); input violated "
            "the graphical-isotopy precondition"
        )
    if r == 0.0:
        return PlaneMap.identity(grid, alpha.support_radius)
    nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    rr = np.hypot(nodes[:, 0], nodes[:, 1])
    inner = rr < alpha.support_radius
    qsol = nodes.copy()
    qsol[inner] = psi.newton_invert(nodes[inner])
    img = 2.0 * qsol - nodes
    return PlaneMap(
        grid.with_values(img[:, 0].reshape(qx.shape)),
        grid.with_values(img[:, 1].reshape(qx.shape)),
        alpha.support_radius,
    )


def family_min_det(alpha, r_samples):
    """min over nodes of det d(psi_r) for each r (monotone-bound diagnostic)."""
    grid = alpha.template
    qx, qy = grid.nodes()
    q = np.stack([qx, qy], axis=-1)
    av = alpha(q)
    out = []
    for r in r_samples:
        psi_vals = q - 0.5 * r * jmap(av)
        psi = PlaneMap(
            grid.with_values(psi_vals[..., 0]),
            grid.with_values(psi_vals[..., 1]),
            alpha.support_radius,
        )
        out.append(_min_det_inside(psi))
    return out


# ---------------------------------------------------------------------------
# trace-chain family of rescaled graphs


@dataclass
class TraceChainFamily:
    """Generating functions g_a of the rescaled graphs a * Graph(phi)."""

    scales: list
    potentials: list          # GridField2D per scale, on the adapted grids
    one_forms: list           # OneFormField per scale
    base_map: PlaneMap

    def potential_at(self, a):
        idx = self.scales.index(a)
        return self.potentials[idx]

    def scaling_defect(self):
        """Max over scales and nodes of |g_a(a q) - a^2 g_1(q)|.

        The adapted grids put node a*q of g_a exactly over node q of g_1,
        so the identity is checked without interpolation.
        """
        g1 = self.potentials[self.scales.index(1.0)] if 1.0 in self.scales \
            else None
        if g1 is None:
            raise ValueError("family must contain the scale a = 1")
        worst = 0.0
        for a, g in zip(self.scales, self.potentials):
            worst = max(
                worst, float(np.max(np.abs(g.values - a * a * g1.values)))
            )
        return worst


def trace_chain_family(phi, scales, delta=1e-3):
    """Recover g_a for each a: midpoint inversion on the a-rescaled graph."""
    scales = [float(a) for a in scales]
    if 1.0 not in scales:
        scales = [1.0] + scales
    ok, min_det = is_graphical(phi, delta)
    if not ok:
        raise ValueError(
            f"base map not graphical (min det = {min_det:.3e})"
        )
    potentials = []
    forms = []
    for a in scales:
        phi_a = _rescaled_map(phi, a)
        try:
            alpha = recover_one_form(phi_a, delta)
        except ValueError as exc:
            raise ValueError(
                f"graphicality lost at scale {a}: {exc}; the midpoint "
                "criterion is scale-invariant, so the discretization is "
                "too coarse"
            ) from exc
        g = integrate_generating(alpha, base_value=0.0)
        potentials.append(g)
        forms.append(alpha)
    return TraceChainFamily(scales, potentials, forms, phi)


def _rescaled_map(phi, a):
    """a * phi(y / a) on the grid shrunk by a (node-exact rescaling)."""
    if a == 1.0:
        return phi
    grid = phi.template
    lo, hi = grid.extent
    target = square_grid(grid.n, extent=a * hi[0])
    ix, iy = phi.node_images()
    return PlaneMap(
        target.with_values(a * ix),
        target.with_values(a * iy),
        a * phi.support_radius,
    )


def trace_chain_dgada(family, a, h_a, probe_points):
    """Finite-difference check of the derivative of the rescaled potentials.

    Compares the centered a-difference of g at fixed chart points with
    2a g_1(q/a) - (1/a) dg_a(q) . q; both sides are O(h) accurate, so the
    defect should shrink linearly with h_a.
    """
    scales = family.scales
    for s in (a - h_a, a, a + h_a):
        if not any(abs(s - sc) < 1e-12 for sc in scales):
            raise ValueError(f"scale {s} missing from the family")
    gm = family.potential_at(_snap(scales, a - h_a))
    g0 = family.potential_at(_snap(scales, a))
    gp = family.potential_at(_snap(scales, a + h_a))
    g1 = family.potential_at(1.0)
    pts = np.asarray(probe_points, dtype=np.float64)
    lhs = (gp(pts) - gm(pts)) / (2.0 * h_a)
    d1, d2 = g0.gradient()
    dg_dot_q = d1(pts) * pts[..., 0] + d2(pts) * pts[..., 1]
    rhs = 2.0 * a * g1(pts / a) - dg_dot_q / a
    return float(np.max(np.abs(lhs - rhs)))


def _snap(scales, value):
    for s in scales:
        if abs(s - value) < 1e-12:
            return s
    raise ValueError(f"scale {value} not in family")
