"""Time-dependent Hamiltonians on the plane and the built-in field families.

A ScalarTimeField evaluates H(t, x) for scalar t and point arrays of shape
(..., 2), vanishes for |x| >= support_radius, and declares how many
continuous derivatives it has.  The structured SeparableBump family

    H(t, x) = amp * tau(t) * (1 - |x - c(t)|^2 / rho^2)^m

carries enough algebraic structure for the compiled flow kernel and for
exact rescaling; everything else goes through the generic evaluator path.
"""

import math

import numpy as np


class ScalarTimeField:
    """H(t, x) wrapping a vectorized evaluator."""

    def __init__(self, evaluator, support_radius, smoothness_order=2):
        self._evaluator = evaluator
        self.support_radius = None if support_radius is None else float(support_radius)
        self.smoothness_order = int(smoothness_order)

    def __call__(self, t, points):
        points = np.asarray(points, dtype=np.float64)
        vals = np.asarray(self._evaluator(t, points), dtype=np.float64)
        if self.support_radius is not None:
            r = np.hypot(points[..., 0], points[..., 1])
            vals = np.where(r >= self.support_radius, 0.0, vals)
        return vals

    def scaled(self, factor):
        return ScalarTimeField(
            lambda t, pts: factor * self(t, pts),
            self.support_radius,
            self.smoothness_order,
        )

    def shifted_in_time(self, offset_fn):
        """H(t, x) - c(t) inside the support is not representable here;
        offsets are carried separately by NormalizedField."""
        raise NotImplementedError


def field_sum(a, b, coeff_a=1.0, coeff_b=1.0):
    radii = [f.support_radius for f in (a, b) if f.support_radius is not None]
    support = max(radii) if len(radii) == 2 else None
    return ScalarTimeField(
        lambda t, pts: coeff_a * a(t, pts) + coeff_b * b(t, pts),
        support,
        min(a.smoothness_order, b.smoothness_order),
    )


def zero_field(support_radius=0.8):
    return ScalarTimeField(lambda t, pts: np.zeros(pts.shape[:-1]), support_radius, 99)


class SeparableBump(ScalarTimeField):
    """amp * tau(t) * (1 - |x - center(t)|^2/rho^2)^m, zero outside the moving disc.

    tau=None means tau == 1 and center=None means a bump fixed at the
    origin (then the flow is an exact rotation in each circle of radius r,
    with clockwise rate u'(r)/r).
    """

    def __init__(self, amp=1.0, rho=0.8, m=4, tau=None, center=None, support_radius=None):
        self.amp = float(amp)
        self.rho = float(rho)
        self.m = int(m)
        self.tau = tau
        self.center = center
        if support_radius is None:
            if center is None:
                support_radius = rho
            else:
                raise ValueError("moving bumps must declare their support_radius")
        super().__init__(self._eval, support_radius, smoothness_order=self.m - 1)

    def _eval(self, t, pts):
        c = np.zeros(2) if self.center is None else np.asarray(self.center(t), dtype=np.float64)
        dx = pts[..., 0] - c[0]
        dy = pts[..., 1] - c[1]
        u = 1.0 - (dx * dx + dy * dy) / (self.rho * self.rho)
        vals = self.amp * np.where(u > 0.0, u, 0.0) ** self.m
        if self.tau is not None:
            vals = self.tau(t) * vals
        return vals

    def tau_at(self, t):
        return 1.0 if self.tau is None else float(self.tau(t))

    def center_at(self, t):
        if self.center is None:
            return np.zeros(2)
        return np.asarray(self.center(t), dtype=np.float64)

    def scaled(self, factor):
        # keep the structured family so flows stay on the compiled kernel
        return self.amplified(factor)

    def rescaled(self, a):
        """The rescaled-path Hamiltonian a^2 H(t, x/a): same family, shrunk."""
        center = None if self.center is None else (lambda t, c=self.center: a * np.asarray(c(t)))
        return SeparableBump(
            amp=self.amp * a * a,
            rho=self.rho * a,
            m=self.m,
            tau=self.tau,
            center=center,
            support_radius=None if center is None else a * self.support_radius,
        )

    def amplified(self, factor):
        return SeparableBump(
            amp=self.amp * factor,
            rho=self.rho,
            m=self.m,
            tau=self.tau,
            center=self.center,
            support_radius=None if self.center is None else self.support_radius,
        )

    def reparametrized(self, chi, dchi):
        """The Hamiltonian dchi(t) * H(chi(t), x) of the reparametrized path."""
        if self.tau is None:
            tau = lambda t: dchi(t)
        else:
            tau = lambda t, base=self.tau: dchi(t) * base(chi(t))
        center = None if self.center is None else (lambda t, c=self.center: c(chi(t)))
        return SeparableBump(
            amp=self.amp,
            rho=self.rho,
            m=self.m,
            tau=tau,
            center=center,
            support_radius=None if center is None else self.support_radius,
        )

    # -- exact radial flow -------------------------------------------------

    def is_radial(self):
        return self.center is None

    def rotation_rate(self, r):
        """Clockwise angular velocity u'(r)/r of the radial profile (tau == 1 slice)."""
        if not self.is_radial():
            raise ValueError("rotation_rate only makes sense for a centered bump")
        r = np.asarray(r, dtype=np.float64)
        u = 1.0 - r * r / (self.rho * self.rho)
        return -2.0 * self.m * self.amp / (self.rho * self.rho) * np.where(u > 0.0, u, 0.0) ** (
            self.m - 1
        )

    def exact_flow(self, t0, t1, points, n_quad=257):
        """Exact flow map of a radial bump: rotation by the integrated rate.

        Clockwise rotation rate is -u'(r)/r per unit of integrated tau.
        """
        if not self.is_radial():
            raise ValueError("exact_flow requires a centered (radial) bump")
        pts = np.asarray(points, dtype=np.float64)
        r = np.hypot(pts[..., 0], pts[..., 1])
        if self.tau is None:
            tau_int = t1 - t0
        else:
            ts = np.linspace(t0, t1, n_quad)
            tau_int = np.trapezoid([self.tau(t) for t in ts], ts)
        theta = -self.rotation_rate(r) * tau_int
        ct, st = np.cos(theta), np.sin(theta)
        out = np.empty_like(pts)
        out[..., 0] = ct * pts[..., 0] - st * pts[..., 1]
        out[..., 1] = st * pts[..., 0] + ct * pts[..., 1]
        return out


def radial_bump(amp=1.0, rho=0.8, m=4):
    """Autonomous C^{m-1} bump centered at the origin."""
    return SeparableBump(amp=amp, rho=rho, m=m)


def loop_bump(amp=1.0, rho=0.8, m=4):
    """Reparametrized bump traversing chi(t) = sin^2(pi t): a loop with zero Calabi."""
    chi = lambda t: math.sin(math.pi * t) ** 2
    dchi = lambda t: math.pi * math.sin(2.0 * math.pi * t)
    return radial_bump(amp, rho, m).reparametrized(chi, dchi)


def moving_bump(amp=0.05, rho=0.25, m=4, sweep=0.3, support_radius=0.8):
    """Small bump whose center circles the origin once."""
    center = lambda t: sweep * np.array([math.cos(2.0 * math.pi * t), math.sin(2.0 * math.pi * t)])
    if sweep + rho > support_radius:
        raise ValueError("moving bump leaves the declared support")
    return SeparableBump(
        amp=amp, rho=rho, m=m, center=center, support_radius=support_radius
    )


def twist_bump(angle=4.0, rho=0.8, m=4):
    """Radial bump strong enough that its time-one map twists by ~angle radians."""
    # peak clockwise rotation angle over one time unit is 2*m*amp/rho^2
    amp = angle * rho * rho / (2.0 * m)
    return radial_bump(amp=amp, rho=rho, m=m)


BUILTIN_FAMILIES = {
    "radial_bump": radial_bump,
    "reparam_loop": loop_bump,
    "moving_bump": moving_bump,
    "twist": twist_bump,
}
