"""RK4 flows, grid maps, Newton inversion, and the path-space metrics."""

import numpy as np
import pytest

from disclab import kernels
from disclab.fields import radial_bump, twist_bump, zero_field
from disclab.flows import (PlaneMap, _simpson_weights, c0_distance, flow_map,
                           hamiltonian_path, hofer_length, integrate_flow,
                           integrate_points, osc_on_grid, vector_field)
from disclab.grids import square_grid


BUMP = radial_bump(amp=0.05, rho=0.8, m=4)


# ---------------------------------------------------------------------------
# point integration


def test_vector_field_convention():
    # X_H = (dH/dp, -dH/dq); for H = radial bump at (r, 0) the q-derivative
    # is negative, so the field points in +p there
    v = vector_field(BUMP, 0.0, np.array([[0.4, 0.0]]))[0]
    assert abs(v[0]) < 1e-10
    assert v[1] > 0.0


def test_rotation_oracle():
    pts = np.array([[0.3, 0.1], [-0.2, 0.45], [0.6, -0.1]])
    num = integrate_points(BUMP, 0.0, 1.0, pts, dt=1e-3)
    exact = BUMP.exact_flow(0.0, 1.0, pts)
    assert np.max(np.abs(num - exact)) < 1e-8


def test_rk4_fourth_order_convergence():
    # h_d small enough that the finite-difference bias of the vector
    # field stays below the dt-error being measured
    H = twist_bump(angle=2.0, rho=0.8, m=4)
    pts = np.array([[0.25, 0.0], [0.45, 0.1], [0.0, 0.55]])
    exact = H.exact_flow(0.0, 1.0, pts)
    err = []
    for dt in (0.05, 0.025):
        num = integrate_points(H, 0.0, 1.0, pts, dt=dt, h_d=1e-5)
        err.append(np.max(np.abs(num - exact)))
    assert err[0] / err[1] >= 14.0


def test_reversibility():
    pts = np.array([[0.3, 0.2], [0.1, -0.5]])
    fwd = integrate_points(BUMP, 0.0, 1.0, pts, dt=1e-3)
    back = integrate_points(BUMP, 1.0, 0.0, fwd, dt=1e-3)
    assert np.max(np.abs(back - pts)) < 1e-12


def test_points_outside_support_never_move():
    pts = np.array([[0.85, 0.0], [0.0, -0.95], [1.2, 1.2]])
    out = integrate_points(BUMP, 0.0, 1.0, pts, dt=1e-2)
    assert np.array_equal(out, pts)


def test_zero_field_flow_is_identity():
    pts = np.array([[0.3, 0.2]])
    out = integrate_points(zero_field(), 0.0, 1.0, pts, dt=1e-2)
    assert np.array_equal(out, pts)


def test_integrate_points_rejects_bad_dt():
    with pytest.raises(ValueError):
        integrate_points(BUMP, 0.0, 1.0, np.zeros((1, 2)), dt=0.0)


def test_integrate_flow_single_point():
    out = integrate_flow(BUMP, 0.0, 0.5, np.array([0.2, 0.1]), dt=1e-3)
    assert out.shape == (2,)


# ---------------------------------------------------------------------------
# kernel lanes


def test_kernel_lane_equivalence():
    lanes = kernels.backends()
    assert "numpy" in lanes
    if len(lanes) < 2:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.7, 0.7, size=(500, 2))
    tau = np.ones(2 * 200 + 1)
    cz = np.zeros_like(tau)
    results = []
    for impl in lanes.values():
        work = np.ascontiguousarray(pts.copy())
        impl.rk4_bump_flow(work, 1.0 / 200, 200, 1e-4, 0.05, 0.8, 4,
                           tau, cz, cz, 0.8)
        results.append(work)
    assert np.max(np.abs(results[0] - results[1])) < 1e-12


def test_generic_evaluator_matches_bump_kernel():
    # the same bump run through the structured kernel and the generic
    # centered-difference path must agree to integrator accuracy
    from disclab.fields import ScalarTimeField

    generic = ScalarTimeField(lambda t, pts: BUMP(t, pts), 0.8, 3)
    pts = np.array([[0.3, 0.1], [0.5, -0.2]])
    a = integrate_points(BUMP, 0.0, 1.0, pts, dt=1e-3)
    b = integrate_points(generic, 0.0, 1.0, pts, dt=1e-3)
    assert np.max(np.abs(a - b)) < 1e-9


# ---------------------------------------------------------------------------
# PlaneMap


def test_flow_map_symplecticity(bump_map_257):
    assert bump_map_257.jacobian_defect() < 1e-4


def test_identity_map():
    grid = square_grid(65)
    ident = PlaneMap.identity(grid, 0.8)
    assert ident.displacement_norm() == 0.0
    assert ident.jacobian_defect() < 1e-12
    pts = np.array([[0.3, -0.4]])
    assert np.allclose(ident(pts), pts)


def test_map_call_matches_flow(bump_map_257):
    pts = np.array([[0.3, 0.15], [-0.4, 0.2]])
    direct = integrate_points(BUMP, 0.0, 1.0, pts, dt=1e-3)
    assert np.max(np.abs(bump_map_257(pts) - direct)) < 1e-6


def test_map_is_identity_outside_support(bump_map_257):
    pts = np.array([[0.9, 0.1], [0.0, 1.01]])
    assert np.array_equal(bump_map_257(pts), pts)


def test_newton_inverse_round_trip(bump_map_257):
    pts = np.array([[0.25, 0.1], [0.5, -0.3], [0.0, 0.6]])
    inv = bump_map_257.inverse()
    back = inv(bump_map_257(pts))
    assert np.max(np.abs(back - pts)) < 1e-5


def test_backward_integration_inverse(bump):
    grid = square_grid(129)
    phi = flow_map(bump, 1.0, grid=grid, dt=1e-3, with_inverse=True)
    inv = phi.inverse()
    pts = np.array([[0.3, 0.2], [-0.1, 0.45]])
    assert np.max(np.abs(inv(phi(pts)) - pts)) < 1e-6
    # inverse of the inverse restores the forward grids
    assert inv.inverse().grid_x is phi.grid_x


def test_compose_with_inverse_is_identity(bump_map_129):
    comp = bump_map_129.inverse().compose(bump_map_129)
    assert comp.displacement_norm() < 1e-5


def test_map_save_load(tmp_path, bump_map_129):
    prefix = str(tmp_path / "map")
    bump_map_129.save(prefix)
    back = PlaneMap.load(prefix)
    assert np.array_equal(back.grid_x.values, bump_map_129.grid_x.values)
    assert np.array_equal(back.grid_y.values, bump_map_129.grid_y.values)
    assert back.support_radius == bump_map_129.support_radius


# ---------------------------------------------------------------------------
# paths


def test_hamiltonian_path_structure(bump):
    path = hamiltonian_path(bump, nt=5, grid=square_grid(65), dt=2e-3)
    assert len(path.maps) == 5
    assert path.maps[0].displacement_norm() == 0.0
    assert path.time_samples[0] == 0.0
    assert path.time_samples[-1] == 1.0
    with pytest.raises(KeyError):
        path.map_at(0.1)
    assert path.map_at(0.5) is path.maps[2]


def test_path_endpoint_matches_flow_map(bump):
    grid = square_grid(65)
    path = hamiltonian_path(bump, nt=5, grid=grid, dt=1e-3)
    phi = flow_map(bump, 1.0, grid=grid, dt=1e-3)
    assert np.max(np.abs(path.maps[-1].grid_x.values - phi.grid_x.values)) < 1e-12


# ---------------------------------------------------------------------------
# metrics


def test_simpson_weights():
    with pytest.raises(ValueError):
        _simpson_weights(4)
    with pytest.raises(ValueError):
        _simpson_weights(1)
    # exact for cubics: int_0^1 t^3 dt = 1/4
    n = 9
    ts = np.linspace(0.0, 1.0, n)
    w = _simpson_weights(n)
    assert np.sum(w * ts**3) * (ts[1] - ts[0]) == pytest.approx(0.25, rel=1e-14)


def test_oscillation_and_hofer_length(bump):
    grid = square_grid(257)
    assert osc_on_grid(bump, 0.0, grid) == pytest.approx(0.05, rel=1e-12)
    # autonomous: the Hofer length is the oscillation itself
    assert hofer_length(bump, grid) == pytest.approx(0.05, rel=1e-12)


def test_c0_distance(bump_map_129):
    grid = bump_map_129.template
    ident = PlaneMap.identity(grid, 0.8)
    assert c0_distance(bump_map_129, bump_map_129, with_inverses=False) < 1e-12
    d = c0_distance(bump_map_129, ident)
    assert 0.0 < d <= 2.0 * 0.8
    # the distance to the identity matches the displacement norm
    assert d == pytest.approx(bump_map_129.displacement_norm(), rel=1e-6)
