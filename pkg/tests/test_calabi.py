"""The Calabi invariant by both definitions and the path algebra."""

import math

import numpy as np
import pytest

from disclab.calabi import (cal_path, compose_dev, flow_normalization_check,
                            inverse_dev, normalize_on_sphere,
                            primitive_and_cal_def1, primitive_potential,
                            spatial_integral)
from disclab.fields import (ScalarTimeField, loop_bump, moving_bump,
                            radial_bump, zero_field)
from disclab.flows import PlaneMap, flow_map, hamiltonian_path
from disclab.grids import square_grid


def closed_form_cal(amp, rho, m):
    """Time-1 Calabi of an autonomous radial bump."""
    return amp * math.pi * rho**2 / (m + 1)


# ---------------------------------------------------------------------------
# path definition (double quadrature)


def test_cal_path_closed_form(bump, grid257):
    expected = closed_form_cal(0.05, 0.8, 4)
    assert cal_path(bump, grid257) == pytest.approx(expected, rel=1e-8)


def test_cal_path_zero_field():
    assert cal_path(zero_field()) == 0.0


def test_cal_path_loop_vanishes(grid257):
    L = loop_bump(amp=0.05, rho=0.8, m=4)
    assert abs(cal_path(L, grid257)) < 1e-8


def test_cal_path_moving_bump(grid257):
    # translation-invariance of the spatial integral: the moving center
    # does not change the Calabi invariant
    F = moving_bump(amp=0.05, rho=0.25, m=4, sweep=0.3)
    expected = closed_form_cal(0.05, 0.25, 4)
    assert cal_path(F, grid257) == pytest.approx(expected, rel=1e-6)


def test_cal_path_is_linear(bump, grid257):
    assert cal_path(bump.amplified(3.0), grid257) == pytest.approx(
        3.0 * cal_path(bump, grid257), rel=1e-12
    )


def test_cal_path_rejects_unsupported(grid257):
    H = ScalarTimeField(lambda t, pts: np.ones(pts.shape[:-1]), None)
    with pytest.raises(ValueError):
        cal_path(H, grid257)
    wide = radial_bump(amp=0.05, rho=1.2, m=4)
    with pytest.raises(ValueError):
        cal_path(wide, grid257)


def test_spatial_integral_constant_profile(bump, grid129):
    v = spatial_integral(bump, 0.0, grid129)
    assert v == pytest.approx(closed_form_cal(0.05, 0.8, 4), rel=1e-7)


# ---------------------------------------------------------------------------
# primitive definition


def test_primitive_definition_agrees_with_path(bump, grid257, bump_map_257):
    cal_p = cal_path(bump, grid257)
    rep = primitive_and_cal_def1(bump_map_257, cal_path_value=cal_p)
    assert rep.agreement_error < 1e-6
    assert rep.primitive_residual < 1e-4
    assert rep.path_independence < 1e-3
    assert rep.grid_n == 257
    assert rep.cal_path == cal_p


def test_primitive_report_json(bump_map_257, bump, grid257):
    rep = primitive_and_cal_def1(bump_map_257, H=bump)
    payload = rep.to_json()
    assert '"cal_def1"' in payload


def test_primitive_gauge_invariance(bump_map_257):
    # replacing alpha by alpha + d(gauge) must not move the value
    def gauge(pts):
        r2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
        u = 1.0 - r2 / 0.81
        return 0.1 * np.where(u > 0.0, u, 0.0) ** 4

    plain = primitive_and_cal_def1(bump_map_257)
    gauged = primitive_and_cal_def1(bump_map_257, gauge=gauge)
    assert abs(plain.cal_def1 - gauged.cal_def1) < 1e-6


def test_primitive_of_identity_is_zero(grid129):
    ident = PlaneMap.identity(grid129, 0.8)
    rep = primitive_and_cal_def1(ident)
    assert abs(rep.cal_def1) < 1e-15
    assert rep.primitive_residual < 1e-12


def test_primitive_of_loop_map_is_zero(grid257):
    L = loop_bump(amp=0.05, rho=0.8, m=4)
    phi = flow_map(L, 1.0, grid=grid257, dt=1e-3)
    rep = primitive_and_cal_def1(phi)
    assert abs(rep.cal_def1) < 1e-6


def test_primitive_rejects_non_area_preserving(grid129):
    # a compactly supported non-symplectic shear: (q + g(q, p), p)
    def fn(pts):
        q, p = pts[..., 0], pts[..., 1]
        u = 1.0 - (q * q + p * p) / 0.49
        g = 3.0 * np.where(u > 0.0, u, 0.0) ** 4
        return np.stack([q + g, p], axis=-1)

    bad = PlaneMap.from_function(grid129, fn, 0.8)
    with pytest.raises(ValueError, match="not closed"):
        primitive_and_cal_def1(bad)


def test_primitive_potential_vanishes_outside_support(bump_map_257):
    h = primitive_potential(bump_map_257)
    qx, qy = h.nodes()
    outside = np.hypot(qx, qy) >= 0.95
    assert np.max(np.abs(h.values[outside])) < 1e-8


# ---------------------------------------------------------------------------
# sphere normalization


def test_normalized_field_mean_zero(bump):
    nf = normalize_on_sphere(bump)
    for t in (0.0, 0.4, 1.0):
        assert abs(nf.sphere_mean(t)) < 1e-15


def test_normalized_offset_integral_is_cal_over_vol(bump, grid257):
    nf = normalize_on_sphere(bump)
    cal = cal_path(bump, grid257)
    assert nf.offset_integral(1.0) == pytest.approx(cal / (2.0 * math.pi),
                                                    rel=1e-10)
    assert nf.support_radius == 0.8
    assert nf.smoothness_order == 3


def test_normalized_field_values(bump):
    nf = normalize_on_sphere(bump)
    pts = np.array([[0.0, 0.0], [0.9, 0.0]])
    vals = nf(0.0, pts)
    c = nf.offset(0.0)
    assert c > 0.0
    assert vals[0] == pytest.approx(0.05 - c, rel=1e-12)
    assert vals[1] == pytest.approx(-c, rel=1e-12)


def test_flow_normalization_check_small(bump):
    grid = square_grid(129)
    nf = normalize_on_sphere(bump, grid=grid)
    path = hamiltonian_path(bump, nt=5, grid=grid, dt=2e-3)
    assert flow_normalization_check(nf, path) < 1e-4


# ---------------------------------------------------------------------------
# path algebra


def test_inverse_path_negates_cal(bump):
    grid = square_grid(129)
    path = hamiltonian_path(bump, nt=17, grid=grid, dt=1e-3)
    inv = inverse_dev(bump, path)
    cal_f = cal_path(bump, grid, nt=33)
    cal_b = cal_path(inv, grid, nt=33)
    assert cal_b == pytest.approx(-cal_f, rel=1e-4)


def test_compose_with_itself_is_trivial(bump):
    grid = square_grid(129)
    path = hamiltonian_path(bump, nt=9, grid=grid, dt=1e-3, with_inverse=True)
    diff = compose_dev(bump, bump, flows=(path, path))
    cal = cal_path(diff, grid, nt=17)
    assert abs(cal) < 1e-5
    pts = np.array([[0.2, 0.3], [0.45, -0.1]])
    assert np.max(np.abs(diff(0.5, pts))) < 1e-4
