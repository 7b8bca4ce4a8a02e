# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 advance for separable-bump Hamiltonians.

The vector field is (dH/dp, -dH/dq) by centered differences of width h_d,
identical to the pure-python lane in _kernels_py; only the inner loop is
compiled.  Time-dependent data (tau and the bump center) is precomputed
at the 2*nsteps+1 half-step time levels by the caller.
"""

import numpy as np

cimport cython

BACKEND = "cython"


cdef inline double bump_val(double x, double y, double cx, double cy,
                            double amp_tau, double inv_rho2, int m) noexcept nogil:
    cdef double dx = x - cx
    cdef double dy = y - cy
    cdef double u = 1.0 - (dx * dx + dy * dy) * inv_rho2
    cdef double acc
    cdef int k
    if u <= 0.0:
        return 0.0
    acc = u
    for k in range(m - 1):
        acc *= u
    return amp_tau * acc


cdef inline void field_at(double x, double y, double cx, double cy,
                          double amp_tau, double inv_rho2, int m,
                          double h_d, double inv2h, double* vx, double* vy) noexcept nogil:
    vx[0] = (bump_val(x, y + h_d, cx, cy, amp_tau, inv_rho2, m)
             - bump_val(x, y - h_d, cx, cy, amp_tau, inv_rho2, m)) * inv2h
    vy[0] = -(bump_val(x + h_d, y, cx, cy, amp_tau, inv_rho2, m)
              - bump_val(x - h_d, y, cx, cy, amp_tau, inv_rho2, m)) * inv2h


def rk4_bump_flow(double[:, ::1] pts, double dt, int nsteps, double h_d,
                  double amp, double rho, int m,
                  double[::1] tau, double[::1] cx, double[::1] cy,
                  double support_radius):
    """Advance pts (in place) through nsteps RK4 steps of the bump flow.

    tau, cx, cy hold the time factor and bump center at the 2*nsteps+1
    half-step levels.  Points starting at radius >= support_radius are
    frozen (the field vanishes there).
    """
    cdef Py_ssize_t npts = pts.shape[0]
    cdef double inv_rho2 = 1.0 / (rho * rho)
    cdef double sup2 = support_radius * support_radius
    cdef double inv2h = 0.5 / h_d
    cdef Py_ssize_t i
    cdef int k, lev
    cdef double x, y, half = 0.5 * dt, sixth = dt / 6.0
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y
    cdef double[::1] amp_tau = amp * np.asarray(tau)

    with nogil:
        for i in range(npts):
            x = pts[i, 0]
            y = pts[i, 1]
            if x * x + y * y >= sup2:
                continue
            for k in range(nsteps):
                lev = 2 * k
                field_at(x, y, cx[lev], cy[lev],
                         amp_tau[lev], inv_rho2, m, h_d, inv2h, &k1x, &k1y)
                field_at(x + half * k1x, y + half * k1y, cx[lev + 1], cy[lev + 1],
                         amp_tau[lev + 1], inv_rho2, m, h_d, inv2h, &k2x, &k2y)
                field_at(x + half * k2x, y + half * k2y, cx[lev + 1], cy[lev + 1],
                         amp_tau[lev + 1], inv_rho2, m, h_d, inv2h, &k3x, &k3y)
                field_at(x + dt * k3x, y + dt * k3y, cx[lev + 2], cy[lev + 2],
                         amp_tau[lev + 2], inv_rho2, m, h_d, inv2h, &k4x, &k4y)
                x += sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                y += sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            pts[i, 0] = x
            pts[i, 1] = y
    return np.asarray(pts)
