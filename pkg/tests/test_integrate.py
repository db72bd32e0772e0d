"""Integrator: accuracy, energy behaviour, two-sided spans, event location."""

import numpy as np
import pytest

from carnotlab import RadialSystem, ReducedSystem, eng, find_events, integrate


def rk4_reference(rhs, state0, t0, t1, n_steps):
    """Fixed-step classical RK4, an independent low-tech integrator."""
    h = (t1 - t0) / n_steps
    t, s = t0, np.asarray(state0, dtype=float)
    for _ in range(n_steps):
        k1 = rhs(t, s)
        k2 = rhs(t + h / 2, s + h / 2 * k1)
        k3 = rhs(t + h / 2, s + h / 2 * k2)
        k4 = rhs(t + h, s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return s


def test_against_fixed_step_rk4():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    state0 = rsys.state_on_shell(np.array([0.3, 0.1]), np.array([1.0, 0.5]))
    traj = integrate(rsys, state0, (0.0, 5.0), tol=1e-12)
    ref = rk4_reference(rsys.rhs, state0, 0.0, 5.0, 20000)
    assert traj(5.0) == pytest.approx(ref, abs=1e-8)


def test_exact_homoclinic_core():
    """On the core window the orbit matches r(t) = sech(2t) for F = 1 - 2 r^2."""
    radial = RadialSystem(1.0, -2.0, 0.0, (0.0, 1.0))
    traj = integrate(radial, np.array([0.0, 1.0]), (-3.0, 3.0), tol=1e-12)
    for t in np.linspace(-3, 3, 25):
        r_exact = 1.0 / np.cosh(2.0 * t)
        assert traj(t)[1] == pytest.approx(r_exact, abs=1e-10)


def test_energy_drift_bookkeeping():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    traj = integrate(rsys, np.array([0.0, 0.0, 1.0, 0.0]), (-20.0, 20.0), tol=1e-10)
    h0 = rsys.hamiltonian(traj.state0)
    assert h0 == pytest.approx(0.5)
    assert traj.energy_drift < 1e-8
    # drift really is the max sampled deviation
    ts, states = traj.samples(101)
    worst = max(abs(rsys.hamiltonian(states[:, i]) - h0) for i in range(len(ts)))
    assert worst <= traj.energy_drift + 1e-15


def test_two_sided_span_glues_at_anchor():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    state0 = rsys.state_on_shell(np.array([0.5, 0.0]), np.array([0.0, 1.0]))
    traj = integrate(rsys, state0, (-4.0, 4.0), tol=1e-11)
    assert traj.anchor == 0.0
    assert traj(0.0) == pytest.approx(state0, abs=1e-12)
    # continuity across the glue point
    assert traj(-1e-9) == pytest.approx(traj(1e-9), abs=1e-7)
    with pytest.raises(ValueError):
        traj(5.0)


def test_anchor_validation():
    rsys = ReducedSystem(eng(2), np.array([1.0, 0.0, 0.0, -4.0]))
    with pytest.raises(ValueError):
        integrate(rsys, np.zeros(4), (1.0, 0.0))
    with pytest.raises(ValueError):
        integrate(rsys, np.zeros(4), (0.0, 1.0), anchor=2.0)


def test_event_crossings():
    """Turning points of the radial oscillation are zeros of p_r."""
    radial = RadialSystem(1.0, -2.0, 0.2, (0.0, 1.0))
    from carnotlab import hill_radial

    hill = hill_radial(radial)
    r0 = 0.5 * (hill.r_min + hill.r_max)
    p0 = np.sqrt(float(radial.w(r0)))
    traj = integrate(radial, np.array([p0, r0]), (0.0, 10.0), tol=1e-11)
    events = [e for e in find_events(traj, lambda t, s: s[0]) if e.kind == "crossing"]
    assert len(events) >= 4
    # at each crossing the radius is a Hill endpoint
    for e in events:
        r = traj(e.t)[1]
        assert min(abs(r - hill.r_min), abs(r - hill.r_max)) < 1e-8
    # crossings alternate and are spaced by half the radial period
    gaps = np.diff([e.t for e in events])
    assert np.allclose(gaps, gaps[0], atol=1e-8)


def test_event_touch():
    """A tangential touch (no sign change) is found as a 'touch' event."""
    radial = RadialSystem(1.0, -2.0, 0.0, (0.0, 1.0))
    # homoclinic orbit: G + 1 touches zero exactly at the turning time t = 0
    traj = integrate(radial, np.array([0.0, 1.0]), (-2.0, 2.0), tol=1e-12)
    events = find_events(traj, lambda t, s: float(radial.g(s[1])) + 1.0)
    touches = [e for e in events if e.kind == "touch"]
    assert len(touches) == 1
    assert touches[0].t == pytest.approx(0.0, abs=1e-6)


def test_trajectory_csv(tmp_path):
    radial = RadialSystem(1.0, -2.0, 0.2, (0.0, 1.0))
    traj = integrate(radial, np.array([0.0, 0.6]), (0.0, 1.0), tol=1e-10)
    path = tmp_path / "traj.csv"
    traj.to_csv(path, n=11)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,s0,s1,H"
    assert len(lines) == 12
