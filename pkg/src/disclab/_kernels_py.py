"""Vectorized numpy fallback for the bump-flow RK4 kernel.

Same algorithm as the compiled lane in _kernels.pyx: classical RK4 on the
centered-difference Hamiltonian vector field of a separable bump, with
time data tabulated at half-step levels.
"""

import numpy as np

BACKEND = "numpy"


def _bump(x, y, cx, cy, amp_tau, inv_rho2, m):
    dx = x - cx
    dy = y - cy
    u = 1.0 - (dx * dx + dy * dy) * inv_rho2
    return amp_tau * np.where(u > 0.0, u, 0.0) ** m


def _field(x, y, cx, cy, amp_tau, inv_rho2, m, h_d):
    inv2h = 0.5 / h_d
    vx = (_bump(x, y + h_d, cx, cy, amp_tau, inv_rho2, m)
          - _bump(x, y - h_d, cx, cy, amp_tau, inv_rho2, m)) * inv2h
    vy = -(_bump(x + h_d, y, cx, cy, amp_tau, inv_rho2, m)
           - _bump(x - h_d, y, cx, cy, amp_tau, inv_rho2, m)) * inv2h
    return vx, vy


def rk4_bump_flow(pts, dt, nsteps, h_d, amp, rho, m, tau, cx, cy, support_radius):
    inv_rho2 = 1.0 / (rho * rho)
    x0 = pts[:, 0]
    y0 = pts[:, 1]
    live = x0 * x0 + y0 * y0 < support_radius * support_radius
    x = x0[live].copy()
    y = y0[live].copy()
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(nsteps):
        lev = 2 * k
        k1x, k1y = _field(x, y, cx[lev], cy[lev], amp * tau[lev], inv_rho2, m, h_d)
        k2x, k2y = _field(x + half * k1x, y + half * k1y, cx[lev + 1], cy[lev + 1],
                          amp * tau[lev + 1], inv_rho2, m, h_d)
        k3x, k3y = _field(x + half * k2x, y + half * k2y, cx[lev + 1], cy[lev + 1],
                          amp * tau[lev + 1], inv_rho2, m, h_d)
        k4x, k4y = _field(x + dt * k3x, y + dt * k3y, cx[lev + 2], cy[lev + 2],
                          amp * tau[lev + 2], inv_rho2, m, h_d)
        x += sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    pts[live, 0] = x
    pts[live, 1] = y
    return pts
