"""Reconstruction of group geodesics and magnetic projections."""

import numpy as np
import pytest

from carnotlab import (
    ReducedSystem,
    eng,
    homoclinic_geodesic,
    integrate,
    magnetic_from_radial,
    magnetic_lift,
    n631,
    normal_form,
    project_magnetic,
    radial_from_momentum,
    reconstruct,
)


@pytest.fixture(scope="module")
def homoclinic_geo():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    traj = integrate(rsys, np.array([0.0, 0.0, 1.0, 0.0]), (-5.0, 5.0), tol=1e-12)
    return rsys, reconstruct(rsys, traj, tol=1e-12)


def test_theta_quadrature_vertical_line():
    """A vertical line has x constant and theta moving linearly along Y."""
    rsys = ReducedSystem(eng(2), np.array([0.0, 0.0, 0.0, 2.0]), (1.0, -1.0))
    # G = 1 at the origin, p = 0: stationary reduced state
    traj = integrate(rsys, np.zeros(4), (0.0, 3.0), tol=1e-12)
    geo = reconstruct(rsys, traj)
    pt = geo.point(3.0)
    assert pt.x == pytest.approx(np.zeros(2), abs=1e-12)
    # theta_0 = t, theta_k = t P_k(0)
    assert pt.theta == pytest.approx([3.0, 0.0, 0.0, 0.0], abs=1e-10)


def test_controls_unit_speed(homoclinic_geo):
    rsys, geo = homoclinic_geo
    for t in np.linspace(-5, 5, 21):
        u = geo.controls(t)
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-9)


def test_projection_pfaffian(homoclinic_geo):
    rsys, geo = homoclinic_geo
    mag = project_magnetic(geo)
    assert mag.pfaffian_residual() < 1e-8
    for t in (-3.0, 0.0, 2.5):
        assert mag.hamiltonian(t) == pytest.approx(0.5, abs=1e-9)


def test_projection_coordinates(homoclinic_geo):
    """y = theta_0 and z = mu . theta along the projection."""
    rsys, geo = homoclinic_geo
    mag = project_magnetic(geo)
    for t in (-2.0, 1.0):
        theta = geo.theta_traj(t)
        assert mag.yfun(t) == pytest.approx(theta[0])
        assert mag.zfun(t) == pytest.approx(float(rsys.mu @ theta))


def test_magnetic_lift_roundtrip(homoclinic_geo):
    rsys, geo = homoclinic_geo
    mag = project_magnetic(geo)
    lifted = magnetic_lift(rsys.spec, rsys.mu, mag, tol=1e-12)
    for t in (-4.0, -1.0, 0.0, 2.0):
        assert lifted.theta_traj(t) == pytest.approx(np.asarray(geo.theta_traj(t)), abs=1e-9)


def test_magnetic_from_radial_matches_full_reduction():
    """Radial route and full planar route give the same magnetic geodesic."""
    spec = eng(2)
    mu = np.array([1.0, 0.0, 0.0, -4.0])
    rsys = ReducedSystem(spec, mu)
    radial = radial_from_momentum(spec, mu, ell=0.2)
    from carnotlab import hill_radial

    hill = hill_radial(radial)
    r0 = 0.5 * (hill.r_min + hill.r_max)
    p0 = np.sqrt(float(radial.w(r0)))
    mag = magnetic_from_radial(radial, p0, r0, (0.0, 6.0), tol=1e-12)

    # same initial condition in the plane
    state0 = np.concatenate([mag.pfun(0.0), mag.xfun(0.0)])
    traj = integrate(rsys, state0, (0.0, 6.0), tol=1e-12)
    full = project_magnetic(reconstruct(rsys, traj, tol=1e-12))
    for t in (1.0, 3.0, 6.0):
        assert mag.xfun(t) == pytest.approx(full.xfun(t), abs=1e-8)
        assert mag.yfun(t) == pytest.approx(full.yfun(t), abs=1e-8)
        assert mag.zfun(t) == pytest.approx(full.zfun(t), abs=1e-8)


def test_homoclinic_geodesic_exact_profile():
    """Tail-continued homoclinic orbit matches r(t) = sech(2 t) at all times."""
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    geo = homoclinic_geodesic(rsys, np.array([0.0, 0.0, 1.0, 0.0]), (-40.0, 40.0))
    for t in (0.0, 1.0, 3.0, 6.0):
        r = np.linalg.norm(geo.xfun(t))
        assert r == pytest.approx(1.0 / np.cosh(2.0 * t), abs=1e-7)
    # tails: relative accuracy limited by the core endpoint (~1e-4), but the
    # exponential law holds out to t = 40 where direct integration is hopeless
    for t in (8.0, 20.0, 40.0):
        r = np.linalg.norm(geo.xfun(t))
        assert r == pytest.approx(1.0 / np.cosh(2.0 * t), rel=1e-3, abs=1e-300)
    # rejects non-turning-point starts
    with pytest.raises(ValueError):
        homoclinic_geodesic(rsys, np.array([0.1, 0.0, 1.0, 0.0]), (-5.0, 5.0))


def test_magnetic_csv_schema(tmp_path, homoclinic_geo):
    rsys, geo = homoclinic_geo
    mag = project_magnetic(geo)
    path = tmp_path / "mag.csv"
    mag.to_csv(path, n=21)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x1,x2,y,z,H"
    assert len(lines) == 22
    row = lines[11].split(",")  # t = 0 sample
    assert float(row[0]) == pytest.approx(0.0)
    assert float(row[-1]) == pytest.approx(0.5, abs=1e-9)


def test_group_csv_schema(tmp_path, homoclinic_geo):
    rsys, geo = homoclinic_geo
    path = tmp_path / "geo.csv"
    geo.to_csv(path, n=11)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,theta0,theta1,theta2,theta3,x1,x2"
    assert len(lines) == 12
