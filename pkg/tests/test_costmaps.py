"""Cost quadratures, radial periods, and the homoclinic period map."""

import numpy as np
import pytest
from scipy.integrate import quad

from carnotlab import (
    DIVERGENT,
    AxisProfile,
    RadialSystem,
    arc_length,
    delta_cost_quadrature,
    delta_cost_time,
    hill_radial,
    integrate,
    is_divergent,
    magnetic_from_radial,
    period_theta,
    radial_period,
)


@pytest.fixture(scope="module")
def homoclinic_radial():
    return RadialSystem(1.0, -2.0, 0.0, (0.0, 1.0))


@pytest.fixture(scope="module")
def periodic_radial():
    return RadialSystem(1.0, -2.0, 0.2, (0.0, 1.0))


def test_radial_period_against_trajectory(periodic_radial):
    """Quadrature period L equals the time between equal-phase turning points."""
    period = radial_period(periodic_radial)
    hill = period["hill"]
    traj = integrate(
        periodic_radial, np.array([0.0, hill.r_max]), (0.0, 3.0 * period["L"]), tol=1e-12
    )
    from carnotlab import find_events

    crossings = [
        e.t
        for e in find_events(traj, lambda t, s: s[0], tol=1e-12)
        if e.kind == "crossing" and e.t > 1e-6  # skip the t = 0 start at r_max
    ]
    # p_r vanishes at every half period
    assert crossings[0] == pytest.approx(period["L"] / 2, abs=1e-9)
    assert crossings[1] == pytest.approx(period["L"], abs=1e-9)


def test_delta_phi_against_trajectory(periodic_radial):
    period = radial_period(periodic_radial)
    hill = period["hill"]
    mag = magnetic_from_radial(periodic_radial, 0.0, hill.r_max, (0.0, period["L"]), tol=1e-12)
    phi_end = float(mag.radial_traj(period["L"])[2])
    assert phi_end == pytest.approx(period["delta_phi"], abs=1e-9)


def test_cost_cross_method_periodic(periodic_radial):
    """Time-domain and quadrature displacement agree over one radial period."""
    period = radial_period(periodic_radial)
    hill = period["hill"]
    r0 = 0.5 * (hill.r_min + hill.r_max)
    p0 = np.sqrt(float(periodic_radial.w(r0)))
    mag = magnetic_from_radial(periodic_radial, p0, r0, (0.0, period["L"]), tol=1e-12)
    ct = delta_cost_time(mag)
    cq = delta_cost_quadrature(periodic_radial, mag.radial_traj)
    assert ct.dt == pytest.approx(cq.dt, abs=1e-8)
    assert ct.dy == pytest.approx(cq.dy, abs=1e-8)
    assert ct.dz == pytest.approx(cq.dz, abs=1e-8)
    assert ct.cost_t == pytest.approx(cq.cost_t, abs=1e-8)
    assert ct.cost_y == pytest.approx(cq.cost_y, abs=1e-8)


def test_cost_cross_method_homoclinic(homoclinic_radial):
    """Agreement persists on the unstable separatrix over a long window."""
    mag = magnetic_from_radial(homoclinic_radial, 0.0, 1.0, (-10.0, 10.0), tol=1e-12)
    ct = delta_cost_time(mag)
    cq = delta_cost_quadrature(homoclinic_radial, mag.radial_traj)
    assert ct.dt == pytest.approx(cq.dt, abs=1e-8)
    assert ct.dy == pytest.approx(cq.dy, abs=1e-8)
    assert ct.dz == pytest.approx(cq.dz, abs=1e-8)


def test_divergent_costs(homoclinic_radial):
    """Dt over the full homoclinic Hill interval diverges and says so."""
    period = radial_period(homoclinic_radial)
    assert is_divergent(period["L"])
    assert not DIVERGENT == 0.0
    with pytest.raises(TypeError):
        DIVERGENT + 1.0


def test_period_theta_standard_values(homoclinic_radial):
    """Theta_1 = 2 and Theta_2 = -2/3 for the standard class F = 1 - 2 r^2."""
    pm = period_theta(homoclinic_radial)
    assert pm["beta_h"] == pytest.approx(2.0)
    assert pm["r_max"] == pytest.approx(1.0)
    assert pm["theta1"] == pytest.approx(2.0, abs=1e-9)
    assert pm["theta2"] == pytest.approx(-2.0 / 3.0, abs=1e-9)


def test_period_theta_independent_quadrature(homoclinic_radial):
    """Theta_2 against a plain quad of the closed-form integrand."""
    pm = period_theta(homoclinic_radial)
    val, _ = quad(
        lambda r: 4.0 * r**2 * (1 - 2 * r**2) / np.sqrt(1.0 - (1.0 - 2 * r**2) ** 2),
        0.0,
        1.0,
        points=[1.0],
        limit=200,
    )
    assert pm["theta2"] == pytest.approx(val, abs=1e-7)


def test_period_theta_scaling_law(homoclinic_radial):
    """Theta_2(beta) / Theta_2(2) = (2 / beta)^{3/2}."""
    base = period_theta(homoclinic_radial)["theta2"]
    for beta in (0.5, 1.0, 4.0, 8.0):
        prof = AxisProfile(1.0, -beta, 1.0, -beta)
        ratio = period_theta(prof)["theta2"] / base
        assert ratio == pytest.approx((2.0 / beta) ** 1.5, abs=1e-9)


def test_period_theta_negative_branch():
    """Theta_1 diverges on the G(0) = -1 branch; Theta_2 can stay finite."""
    # pencil (-2, 1) on F = 1 + 2 r^2: G = -1 + 2 r^2, and 1 - F vanishes at
    # the equilibrium so the Theta_2 integrand is integrable there
    prof = AxisProfile(1.0, 2.0, -1.0, 2.0)
    pm = period_theta(prof)
    assert is_divergent(pm["theta1"])
    assert np.isfinite(pm["theta2"])
    assert pm["branch"] == -1


def test_period_theta_rejects_non_homoclinic():
    with pytest.raises(ValueError):
        period_theta(RadialSystem(0.5, -2.0, 0.0, (0.0, 1.0)))
    with pytest.raises(ValueError):
        period_theta(RadialSystem(1.0, -2.0, 0.2, (0.0, 1.0)))


def test_arc_length_homoclinic(homoclinic_radial):
    """Planar arc length of the full soliton is Int sqrt(1 - G^2) dt = 2."""
    mag = magnetic_from_radial(homoclinic_radial, 0.0, 1.0, (-8.0, 8.0), tol=1e-12)
    # with r = sech(2t): sqrt(1 - G^2) = 2 r sqrt(1 - r^2), total length 2
    assert arc_length(mag) == pytest.approx(2.0, abs=1e-4)


def test_cost_window_splitting(periodic_radial):
    """Windows spanning several turning points still agree cross-method."""
    period = radial_period(periodic_radial)
    hill = period["hill"]
    mag = magnetic_from_radial(periodic_radial, 0.0, hill.r_max, (0.0, 2.6 * period["L"]), tol=1e-12)
    ct = delta_cost_time(mag)
    cq = delta_cost_quadrature(periodic_radial, mag.radial_traj)
    assert len(cq.meta["turning_times"]) >= 5
    assert ct.dy == pytest.approx(cq.dy, abs=1e-7)
    assert ct.dz == pytest.approx(cq.dz, abs=1e-7)
