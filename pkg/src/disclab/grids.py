"""Grid-sampled scalar fields on the plane, disc quadrature, and the domain model.

All fields live on uniform square grids.  A grid node (i, j) sits at
``origin + (i*spacing, j*spacing)`` and ``values[i, j]`` stores the sample
there (x-index first).  Interpolation is linear (order 1) or cubic spline
(order 3, the default); cubic coefficients are prefiltered so the
interpolant reproduces the stored node values exactly.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DiscDomain:
    """Unit disc embedded as the upper hemisphere of a sphere model.

    ``support_radius`` is the radius inside which all Hamiltonians live
    (the margin to the boundary keeps every map the identity near the
    disc's edge).  ``sphere_volume`` is the total area of the sphere
    model; the lower hemisphere is an identity region of area
    ``sphere_volume - pi``.
    """

    support_radius: float = 0.8
    radius: float = 1.0
    sphere_volume: float = TWO_PI

    def __post_init__(self):
        if not 0.0 < self.support_radius < self.radius:
            raise ValueError(
                f"support_radius must lie in (0, {self.radius}), got {self.support_radius}"
            )
        disc_area = math.pi * self.radius**2
        if self.sphere_volume <= disc_area:
            raise ValueError(
                f"sphere_volume must exceed the disc area {disc_area}, got {self.sphere_volume}"
            )

    @property
    def disc_area(self):
        return math.pi * self.radius**2

    @property
    def identity_area(self):
        return self.sphere_volume - self.disc_area


class GridField2D:
    """A scalar field sampled on a uniform n-by-n grid."""

    def __init__(self, origin, spacing, values, interpolation_order=3):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"values must be square, got shape {values.shape}")
        if values.shape[0] < 16:
            raise ValueError(f"grid needs n >= 16, got n = {values.shape[0]}")
        if spacing <= 0.0:
            raise ValueError(f"spacing must be positive, got {spacing}")
        if interpolation_order not in (1, 3):
            raise ValueError(f"interpolation_order must be 1 or 3, got {interpolation_order}")
        self.origin = np.asarray(origin, dtype=np.float64).reshape(2)
        self.spacing = float(spacing)
        self.values = values
        self.interpolation_order = int(interpolation_order)
        self._coeffs = None

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def extent(self):
        """(min corner, max corner) of the sampled square."""
        top = self.origin + (self.n - 1) * self.spacing
        return self.origin.copy(), top

    def nodes(self):
        """Node coordinates as arrays qx, qy of shape (n, n)."""
        axis = self.origin[0] + self.spacing * np.arange(self.n)
        ayis = self.origin[1] + self.spacing * np.arange(self.n)
        return np.meshgrid(axis, ayis, indexing="ij")

    def axes(self):
        ax = self.origin[0] + self.spacing * np.arange(self.n)
        ay = self.origin[1] + self.spacing * np.arange(self.n)
        return ax, ay

    def covers(self, points, margin=0.0):
        pts = np.asarray(points, dtype=np.float64)
        lo, hi = self.extent
        return bool(
            np.all(pts[..., 0] >= lo[0] - margin)
            and np.all(pts[..., 0] <= hi[0] + margin)
            and np.all(pts[..., 1] >= lo[1] - margin)
            and np.all(pts[..., 1] <= hi[1] + margin)
        )

    def _spline_coeffs(self):
        if self._coeffs is None:
            self._coeffs = ndimage.spline_filter(self.values, order=3, mode="mirror")
        return self._coeffs

    def __call__(self, points):
        """Interpolate at points of shape (..., 2)."""
        pts = np.asarray(points, dtype=np.float64)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        ix = (flat[:, 0] - self.origin[0]) / self.spacing
        iy = (flat[:, 1] - self.origin[1]) / self.spacing
        if self.interpolation_order == 1:
            out = ndimage.map_coordinates(
                self.values, [ix, iy], order=1, mode="nearest"
            )
        else:
            out = ndimage.map_coordinates(
                self._spline_coeffs(), [ix, iy], order=3, mode="mirror", prefilter=False
            )
        return out.reshape(shape)

    def gradient(self):
        """Centered-difference gradient as two grid fields (one-sided at edges)."""
        gq, gp = np.gradient(self.values, self.spacing, edge_order=2)
        mk = lambda v: GridField2D(self.origin, self.spacing, v, self.interpolation_order)
        return mk(gq), mk(gp)

    def with_values(self, values):
        return GridField2D(self.origin, self.spacing, values, self.interpolation_order)

    # -- serialization ----------------------------------------------------

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# n = {self.n}\n")
            fh.write(f"# spacing = {self.spacing!r}\n")
            fh.write(f"# origin = {float(self.origin[0])!r} {float(self.origin[1])!r}\n")
            fh.write(f"# interpolation_order = {self.interpolation_order}\n")
            np.savetxt(fh, self.values, fmt="%.17e", delimiter=",")

    @classmethod
    def from_csv(cls, path):
        meta = {}
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                body.append(line)
        values = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",")
        origin = [float(tok) for tok in meta["origin"].split()]
        return cls(
            origin,
            float(meta["spacing"]),
            values,
            int(meta.get("interpolation_order", 3)),
        )

    def to_json(self, path):
        payload = {
            "n": self.n,
            "spacing": self.spacing,
            "origin": list(self.origin),
            "interpolation_order": self.interpolation_order,
            "values": self.values.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            payload["origin"],
            payload["spacing"],
            np.array(payload["values"]),
            payload["interpolation_order"],
        )


def square_grid(n=256, extent=1.05, interpolation_order=3):
    """Empty grid field covering [-extent, extent]^2 with n nodes per side."""
    spacing = 2.0 * extent / (n - 1)
    return GridField2D(
        (-extent, -extent), spacing, np.zeros((n, n)), interpolation_order
    )


def sample(grid, fn):
    """Grid field holding fn evaluated at the nodes of `grid`."""
    qx, qy = grid.nodes()
    pts = np.stack([qx, qy], axis=-1)
    return grid.with_values(np.asarray(fn(pts), dtype=np.float64))


_WEIGHT_CACHE = {}


def disc_weights(grid, radius=1.0, subsample=16):
    """Quadrature weights for integration over the disc |x| <= radius.

    Each node owns an h-by-h cell centered at the node; interior cells get
    weight h^2, cells crossing the circle get h^2 times the covered
    fraction, estimated on a subsample-by-subsample stencil.
    """
    key = (grid.n, grid.spacing, tuple(grid.origin), radius, subsample)
    cached = _WEIGHT_CACHE.get(key)
    if cached is not None:
        return cached
    h = grid.spacing
    qx, qy = grid.nodes()
    r = np.hypot(qx, qy)
    half_diag = h * math.sqrt(0.5)
    inside = r <= radius - half_diag
    outside = r >= radius + half_diag
    weights = np.where(inside, h * h, 0.0)
    bx, by = np.nonzero(~inside & ~outside)
    if bx.size:
        offs = (np.arange(subsample) + 0.5) / subsample - 0.5
        sx = qx[bx, by][:, None, None] + h * offs[None, :, None]
        sy = qy[bx, by][:, None, None] + h * offs[None, None, :]
        frac = np.mean(np.hypot(sx, sy) <= radius, axis=(1, 2))
        weights[bx, by] = h * h * frac
    _WEIGHT_CACHE[key] = weights
    return weights


def integrate_disc(f, radius=1.0):
    """Quadrature of a grid field over the disc of the given radius."""
    lo, hi = f.extent
    if lo[0] > -radius or lo[1] > -radius or hi[0] < radius or hi[1] < radius:
        raise ValueError(
            f"grid [{lo}, {hi}] does not cover the disc of radius {radius}"
        )
    return float(np.sum(disc_weights(f, radius) * f.values))


def integrate_plane(f):
    """Plain cell-sum quadrature over the whole grid square."""
    return float(np.sum(f.values) * f.spacing**2)
