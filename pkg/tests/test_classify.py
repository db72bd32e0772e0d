"""Geodesic classification and optimality diagnostics."""

import numpy as np
import pytest

from carnotlab import (
    RadialSystem,
    ReducedSystem,
    conjugate_check,
    classify,
    eng,
    homoclinic_geodesic,
    integrate,
    is_abnormal,
    abnormal_family,
    maxwell_check,
    metric_line_condition,
    n631,
    reconstruct,
)

S = 1.0 / np.sqrt(2.0)

# (spec factory, mu, pencil, initial state, expected label)
CATALOG = [
    # straight horizontal line: F identically zero
    (lambda: eng(2), [0.0, 0.0, 0.0, 0.0], (0.0, 1.0), [1.0, 0.0, 0.2, -0.1], "line"),
    # vertical line: stationary reduced state at a critical point with G = 1
    (lambda: eng(2), [1.0, 0.0, 0.0, -4.0], (0.0, 1.0), [0.0, 0.0, 0.0, 0.0], "vertical-line"),
    # linear F: free motion plus a harmonic oscillation
    (lambda: eng(2), [0.0, 1.0, 0.0, 0.0], (0.0, 1.0), [0.3, 0.4, 0.0, 0.0], "small-oscillation"),
    # radial class, zero angular momentum, bounded Hill interval
    (lambda: eng(2), [0.5, 0.0, 0.0, -4.0], (0.0, 1.0), [0.2, 0.0, 0.4, 0.0], "r-periodic"),
    # radial class, nonzero angular momentum
    (lambda: eng(2), [1.0, 0.0, 0.0, -4.0], (0.0, 1.0), [0.0, 0.4, 0.5, 0.0], "r-periodic"),
    # radial homoclinic orbit through the turning point r_max = 1
    (lambda: eng(2), [1.0, 0.0, 0.0, -4.0], (0.0, 1.0), [0.0, 0.0, 1.0, 0.0], "homoclinic"),
    # hyperbolic saddle of N631, homoclinic branch along x1 + x2 = 0
    (lambda: n631(), [1.0, 0.0, 0.0, 4.0], (0.0, 1.0), [0.0, 0.0, -S, S], "homoclinic"),
    # the other branch (a3 negated), along x1 = x2
    (lambda: n631(), [1.0, 0.0, 0.0, -4.0], (0.0, 1.0), [0.0, 0.0, S, S], "homoclinic"),
    # off-axis state of the saddle: no invariant-axis structure
    (lambda: n631(), [1.0, 0.0, 0.0, 4.0], (0.0, 1.0), [0.0, 0.0, 0.3, 0.0], "generic"),
]


@pytest.mark.parametrize("spec_fn,mu,pencil,ic,label", CATALOG)
def test_catalog_labels(spec_fn, mu, pencil, ic, label):
    rsys = ReducedSystem(spec_fn(), np.array(mu), pencil)
    result = classify(rsys, np.array(ic))
    assert result.label == label


def test_homoclinic_details(homoclinic_system, homoclinic_ic):
    result = classify(homoclinic_system, homoclinic_ic)
    assert result.label == "homoclinic"
    assert result.details["branch"] == 1
    assert result.details["beta_h"] == pytest.approx(2.0)
    assert result.details["ell"] == pytest.approx(0.0, abs=1e-12)
    assert result.details["tail_ok"]


def test_near_homoclinic_is_not_homoclinic(homoclinic_system):
    """A state slightly off the separatrix must not be labeled homoclinic."""
    result = classify(homoclinic_system, np.array([0.0, 0.2, 1.0, 0.0]))
    assert result.label != "homoclinic"


def test_maxwell_standard_orbit():
    radial = RadialSystem(1.0, -2.0, 0.2, (0.0, 1.0))
    data = maxwell_check(radial)
    assert data["gap_at_L"] < 1e-8
    assert data["gap_at_half"] > 1e-2
    assert data["t_cut_upper"] == data["L"]
    with pytest.raises(ValueError):
        maxwell_check(RadialSystem(1.0, -2.0, 0.0, (0.0, 1.0)))


def test_conjugate_touches():
    """Oscillation through the center touches {G = -1} with p = 0, F = -1."""
    rsys = ReducedSystem(eng(2), np.array([0.5, 0.0, 0.0, -4.0]))
    r_max = np.sqrt(0.75)  # G = 0.5 - 2 r^2 = -1
    traj = integrate(rsys, np.array([0.0, 0.0, r_max, 0.0]), (0.0, 8.0), tol=1e-12)
    data = conjugate_check(rsys, traj)
    assert not data["degenerate"]
    touches = data["touches"]
    assert len(touches) >= 3
    for t in touches:
        assert t["boundary"] == -1
        assert t["p_norm"] < 1e-6
        assert t["f_value"] == pytest.approx(-1.0, abs=1e-6)
        assert t["f_expected"] == pytest.approx(-1.0)
    # consecutive same-boundary touches bound conjugate pairs
    assert data["conjugate_pairs"] == [
        (u["t"], v["t"]) for u, v in zip(touches, touches[1:])
    ]


def test_conjugate_degenerate_vertical():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    traj = integrate(rsys, np.zeros(4), (0.0, 2.0), tol=1e-10)
    data = conjugate_check(rsys, traj)
    assert data["degenerate"]
    assert data["touches"] == []


def test_metric_line_vertical_exact():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    traj = integrate(rsys, np.zeros(4), (-5.0, 5.0), tol=1e-10)
    geo = reconstruct(rsys, traj)
    data = metric_line_condition(geo, 5.0)
    assert data["estimate"] == pytest.approx(2.0, abs=1e-12)
    assert data["deficit"] == pytest.approx(0.0, abs=1e-12)


def test_metric_line_homoclinic_deficit(homoclinic_system, homoclinic_ic):
    """The homoclinic estimate is 2 - Theta_1 / T, strictly below 2."""
    geo = homoclinic_geodesic(homoclinic_system, homoclinic_ic, (-50.0, 50.0))
    data = metric_line_condition(geo, 50.0)
    assert data["estimate"] == pytest.approx(2.0 - 2.0 / 50.0, abs=1e-3)
    assert data["deficit"] > 1e-2


def test_metric_line_projected_direction():
    """With an explicit direction the estimate is <v, phi(T)>."""
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    traj = integrate(rsys, np.zeros(4), (-4.0, 4.0), tol=1e-10)
    geo = reconstruct(rsys, traj)
    data = metric_line_condition(geo, 4.0, v=np.array([1.0, 0.0, 0.0]))
    assert data["estimate"] == pytest.approx(0.0, abs=1e-12)


def test_abnormal_vertical_family():
    spec = eng(2)
    xs = [np.array([0.4, -0.2])] * 5
    us = [np.array([0.0, 0.0, 1.0])] * 5
    data = is_abnormal(spec, xs, us)
    assert data["abnormal"] and data["family"] == "vertical"


def test_abnormal_horizontal_family():
    spec = eng(2)
    # straight line with u_Y = 0: lies in a level set of P_2 = x2
    xs = [np.array([t, 0.3]) for t in np.linspace(0, 1, 6)]
    us = [np.array([1.0, 0.0, 0.0])] * 6
    data = is_abnormal(spec, xs, us)
    assert data["abnormal"] and data["family"] == "horizontal"
    # a curved trace not contained in any level set is not abnormal
    xs_bad = [np.array([t, t**2]) for t in np.linspace(0, 1, 8)]
    us_bad = [np.array([1.0, 0.0, 0.0])] * 8
    assert not is_abnormal(spec, xs_bad, us_bad)["abnormal"]
    # a generic horizontal-and-vertical control is not abnormal either
    us_mixed = [np.array([0.8, 0.0, 0.6])] * 6
    assert not is_abnormal(spec, xs, us_mixed)["abnormal"]


def test_abnormal_family_description():
    desc = abnormal_family(n631())
    assert set(desc) == {"vertical", "horizontal"}
    assert len(desc["horizontal"]["level_sets"]) == 3
