"""Classical actions, generating/phase functions, HJ residuals, suspension."""

import math

import numpy as np
import pytest

from disclab import phase as ph
from disclab.calabi import cal_path
from disclab.fields import radial_bump, twist_bump, zero_field
from disclab.graphical import recover_one_form
from disclab.grids import DiscDomain, square_grid


VOL = DiscDomain().sphere_volume


# ---------------------------------------------------------------------------
# classical action


def test_action_of_resting_chord():
    times = np.linspace(0.0, 1.0, 5)
    traj = np.tile([0.3, 0.1, 0.0, 0.0], (5, 1))
    rec = ph.classical_action(lambda t, q, p: 0.0, times, traj)
    assert rec.action == 0.0


def test_action_of_straight_chord_is_p_dot_dq():
    times = np.linspace(0.0, 1.0, 9)
    q = np.stack([times, np.zeros_like(times)], axis=-1) * 0.4
    p = np.tile([0.7, -0.2], (9, 1))
    traj = np.concatenate([q, p], axis=1)
    rec = ph.classical_action(lambda t, q, p: 0.0, times, traj)
    assert rec.action == pytest.approx(0.7 * 0.4, rel=1e-12)


def test_action_subtracts_hamiltonian_integral():
    times = np.linspace(0.0, 1.0, 9)
    traj = np.tile([0.0, 0.0, 0.0, 0.0], (9, 1))
    rec = ph.classical_action(lambda t, q, p: t * t, times, traj)
    assert rec.action == pytest.approx(-1.0 / 3.0, rel=1e-12)


def test_action_sampling_rejections():
    times = np.linspace(0.0, 1.0, 5)
    good = np.zeros((5, 4))
    with pytest.raises(ValueError):
        ph.classical_action(lambda t, q, p: 0.0, times, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        ph.classical_action(lambda t, q, p: 0.0, times, np.zeros((5, 3)))
    with pytest.raises(ValueError):
        ph.classical_action(lambda t, q, p: 0.0,
                            np.linspace(0.0, 1.0, 4), np.zeros((4, 4)))
    bad_times = np.array([0.0, 0.1, 0.5, 0.7, 1.0])
    with pytest.raises(ValueError):
        ph.classical_action(lambda t, q, p: 0.0, bad_times, good)


def test_lift_to_chart():
    F = lambda t, pts: pts[..., 0]
    lifted = ph.lift_to_chart(F)
    q = np.array([0.3, 0.0])
    p = np.array([0.0, 0.2])
    # x = q + j(p)/2 = (0.3 - 0.1, 0.0)
    assert lifted(0.0, q, p) == pytest.approx(0.2)


# ---------------------------------------------------------------------------
# basic generating function


def test_basic_generating_of_zero_field():
    gs = ph.basic_generating(zero_field(), grid=square_grid(65), nu=11)
    assert np.max(np.abs(gs.h)) < 1e-15
    assert np.max(np.abs(gs.p)) == 0.0
    assert np.array_equal(gs.q, gs.seeds)


def test_basic_generating_exactness(bump):
    gs = ph.basic_generating(bump, grid=square_grid(129), dt=1e-3, nu=51)
    assert gs.exactness_defect() < 5e-4


def test_basic_generating_identity_region_value(bump, grid257):
    gs = ph.basic_generating(bump, grid=square_grid(129), dt=1e-3, nu=51)
    cal = cal_path(bump, grid257)
    # seeds outside the support never move; their chord action is the
    # normalization constant integral = Cal / vol
    qx, qy = gs.seeds[..., 0], gs.seeds[..., 1]
    outside = np.hypot(qx, qy) >= 0.9
    vals = gs.h[outside]
    assert np.max(np.abs(vals - cal / VOL)) < 1e-4


# ---------------------------------------------------------------------------
# phase functions


@pytest.fixture(scope="module")
def bump_phase(bump, grid257):
    return ph.phase_function_graphical(bump, grid=grid257, dt=1e-3)


def test_phase_value_is_cal_over_vol(bump_phase, bump, grid257):
    _, value, _ = bump_phase
    cal = cal_path(bump, grid257)
    assert value == pytest.approx(cal / VOL, abs=2e-3)


def test_phase_matches_identity_region(bump_phase):
    f, value, _ = bump_phase
    qx, qy = f.nodes()
    outside = np.hypot(qx, qy) >= 0.9
    assert np.max(np.abs(f.values[outside] - value)) < 1e-6


def test_phase_gradient_bound(bump_phase):
    f, _, alpha = bump_phase
    assert ph.gradient_bound_defect(f, alpha) <= 1e-4


def test_lagrangian_selector_matches_recovered_form(bump_phase, bump_map_257):
    f, _, _ = bump_phase
    sigma = ph.lagrangian_selector(f, 0.8)
    alpha = recover_one_form(bump_map_257)
    core = (slice(4, -4), slice(4, -4))
    assert np.max(np.abs(sigma.a1.values[core] - alpha.a1.values[core])) < 5e-4
    assert np.max(np.abs(sigma.a2.values[core] - alpha.a2.values[core])) < 5e-4


def test_phase_rejects_non_graphical_slice():
    H = twist_bump(angle=4.0, rho=0.8, m=4)
    with pytest.raises(ValueError, match="not graphical"):
        ph.phase_function_graphical(H, grid=square_grid(129), dt=2e-3)


def test_phase_lipschitz_in_the_hamiltonian(grid257):
    # sup |f_H - f_H'| bounded by the Hofer distance of the Hamiltonians
    H1 = radial_bump(amp=0.05, rho=0.8, m=4)
    H2 = radial_bump(amp=0.06, rho=0.8, m=4)
    f1, _, _ = ph.phase_function_graphical(H1, grid=grid257, dt=2e-3)
    f2, _, _ = ph.phase_function_graphical(H2, grid=grid257, dt=2e-3)
    gap = float(np.max(np.abs(f1.values - f2.values)))
    assert gap <= 0.01 * 1.001   # ||H1 - H2||_osc = 0.01


# ---------------------------------------------------------------------------
# phase families


def make_linear_family(c=0.3, n=3):
    """f(a, q) = q1 + a*c on a small grid: an exact HJ solution for G = -c."""
    grid = square_grid(33, extent=1.0)
    samples = [0.25, 0.5, 0.75][:n] if n == 3 else list(np.linspace(0.25, 0.75, n))
    fields = []
    for a in samples:
        qx, _ = grid.nodes()
        fields.append(grid.with_values(qx + a * c))
    return ph.PhaseFamily(samples, fields, [a * c for a in samples])


def test_hj_residual_exact_solution():
    fam = make_linear_family()
    rep = ph.hj_residual(fam, lambda a, q, p: -0.3 * np.ones(q.shape[:-1]))
    assert rep.residual < 1e-12
    assert rep.parameter_step == pytest.approx(0.25)


def test_hj_residual_needs_three_uniform_samples():
    fam = make_linear_family()
    short = ph.PhaseFamily(fam.parameter_samples[:2], fam.fields[:2],
                           fam.normalization_value[:2])
    with pytest.raises(ValueError):
        ph.hj_residual(short, lambda a, q, p: 0.0)
    skew = ph.PhaseFamily([0.1, 0.2, 0.5], fam.fields, fam.normalization_value)
    with pytest.raises(ValueError):
        ph.hj_residual(skew, lambda a, q, p: 0.0)


def test_phase_family_value_and_lipschitz():
    fam = make_linear_family()
    assert fam.value_at(1) == pytest.approx(0.15)
    for L in fam.lipschitz_constants():
        assert L == pytest.approx(1.0, rel=1e-10)


def test_phase_family_constant_scalar_value():
    grid = square_grid(17, extent=0.5)
    f = grid.with_values(np.full((17, 17), 0.25))
    fam = ph.PhaseFamily([0.0], [f], 0.25)
    assert fam.value_at(0) == 0.25
    assert fam.normalization_defect(0.3) == 0.0


def test_phase_family_save_load(tmp_path):
    fam = make_linear_family()
    fam.save(tmp_path / "family")
    back = ph.PhaseFamily.load(tmp_path / "family")
    assert back.parameter_samples == fam.parameter_samples
    assert back.normalization_value == fam.normalization_value
    for a, b in zip(back.fields, fam.fields):
        assert np.array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# suspension identity and the phase integral


def test_suspension_identity(bump):
    assert ph.suspension_check(bump, nt=41, dt=1e-3) < 5e-4


def test_suspension_needs_support():
    H = zero_field(support_radius=None)
    with pytest.raises(ValueError):
        ph.suspension_check(H)


def test_phase_integral_of_constant_family():
    grid = square_grid(33, extent=1.0)
    v = 0.4
    f = grid.with_values(np.full((33, 33), v))
    fam = ph.PhaseFamily([0.0, 0.5, 1.0], [f, f, f], v)
    integrals, deriv = ph.phase_integral(fam)
    for ival in integrals:
        assert ival == pytest.approx(v * VOL, rel=1e-12)
    assert np.max(np.abs(deriv)) < 1e-12


def test_phase_integral_at_time_one(bump_phase, bump, grid257):
    f, value, _ = bump_phase
    fam = ph.PhaseFamily([1.0], [f], value)
    integrals, _ = ph.phase_integral(fam)
    # the chart integral of the potential cancels the identity-region
    # contribution value * vol: the phase integral vanishes
    cal = cal_path(bump, grid257)
    assert abs(value * VOL - cal) < 2e-3
    assert abs(integrals[0]) < 1e-3
