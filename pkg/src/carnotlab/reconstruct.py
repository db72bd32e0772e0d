"""Reconstruction of group geodesics and magnetic-space projections.

A solution (p(t), x(t)) of the reduced system determines the full group
geodesic through quadrature of the theta block,

    theta_0' = G(x(t)),     theta_k' = G(x(t)) P_k(x(t)),

and its left-translated velocity (the controls) is u = (p(t), G(x(t))).

The magnetic quotient R^{n+2}_F keeps (x, y, z) with y = theta_0 and
z = a0 theta_0 + sum a_k theta_k; magnetic geodesics satisfy y' = G(x),
z' = G(x) F(x), so they are horizontal for the Pfaffian form dz - F dy.
The lift of a magnetic geodesic back to the group integrates the same
quadrature, using only the planar data x(t) and G.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .integrate import Trajectory, integrate
from .models import GroupPoint, GroupSpec
from .reduced import RadialSystem, ReducedSystem, normal_form

__all__ = [
    "GroupGeodesic",
    "MagneticGeodesic",
    "reconstruct",
    "project_magnetic",
    "magnetic_lift",
    "magnetic_from_radial",
    "homoclinic_geodesic",
]


class _QuadratureSystem:
    """Adapter so the integrator can run a nonautonomous quadrature."""

    def __init__(self, rhs: Callable):
        self.rhs = rhs


@dataclass
class GroupGeodesic:
    """Group geodesic: horizontal data plus integrated theta block."""

    spec: GroupSpec
    mu: np.ndarray
    pencil: tuple[float, float]
    xfun: Callable[[float], np.ndarray]
    pfun: Callable[[float], np.ndarray]
    theta_traj: Trajectory
    tspan: tuple[float, float]

    def g_at(self, t: float) -> float:
        a, b = self.pencil
        f = self.spec.f_polynomial(self.mu)
        return a + b * f(self.xfun(t))

    def point(self, t: float) -> GroupPoint:
        return GroupPoint(np.asarray(self.theta_traj(t)), self.xfun(t))

    def controls(self, t: float) -> np.ndarray:
        """Left-translated velocity (u_1..u_n, u_Y) = (p(t), G(x(t)))."""
        return np.concatenate([self.pfun(t), [self.g_at(t)]])

    def to_csv(self, path, n: int = 2001) -> None:
        ts = np.linspace(self.tspan[0], self.tspan[1], n)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            theta_names = [f"theta{i}" for i in range(self.spec.theta_dim)]
            x_names = [f"x{i + 1}" for i in range(self.spec.n)]
            writer.writerow(["t"] + theta_names + x_names)
            for t in ts:
                pt = self.point(t)
                writer.writerow(
                    [f"{t:.12g}"] + [f"{v:.12g}" for v in pt.theta] + [f"{v:.12g}" for v in pt.x]
                )


def reconstruct(
    rsys: ReducedSystem,
    traj: Trajectory,
    theta0: np.ndarray | None = None,
    tol: float | None = None,
) -> GroupGeodesic:
    """Integrate the theta block above a reduced trajectory."""
    spec = rsys.spec
    if theta0 is None:
        theta0 = np.zeros(spec.theta_dim)

    def rhs(t: float, _theta: np.ndarray) -> np.ndarray:
        _, x = rsys.split(traj(t))
        g = rsys.g(x)
        return np.concatenate([[g], g * spec.eval_polys(x)])

    theta_traj = integrate(
        _QuadratureSystem(rhs),
        np.asarray(theta0, dtype=float),
        traj.tspan,
        tol=tol if tol is not None else traj.tol,
        anchor=traj.anchor,
    )

    def xfun(t: float) -> np.ndarray:
        return rsys.split(traj(t))[1]

    def pfun(t: float) -> np.ndarray:
        return rsys.split(traj(t))[0]

    return GroupGeodesic(spec, rsys.mu, rsys.pencil, xfun, pfun, theta_traj, traj.tspan)


def homoclinic_geodesic(
    rsys: ReducedSystem,
    state0: np.ndarray,
    tspan: tuple[float, float],
    t_core: float = 6.0,
    tol: float = 1e-12,
) -> GroupGeodesic:
    """Long-time homoclinic geodesic with analytically continued tails.

    The separatrix is dynamically unstable: integration error grows like
    e^{lambda |t|} with lambda = sqrt(2 beta_h), so a direct solve leaves the
    homoclinic orbit long before large horizons.  Here the orbit is integrated
    only over a core window where the solver is trustworthy, and the tails are
    continued by the linearized saddle decay

        x(t) = center + d r(t),  r(t) = r(t_c) e^{-lambda (|t| - t_c)},
        p(t) = -sign(t) lambda r(t) d,

    which is exponentially accurate since the orbit is already within
    O(e^{-lambda t_c}) of the equilibrium at the matching time.  ``state0``
    must be the turning-point state (p = 0, x at maximal distance from the
    saddle center); the theta block is integrated over the full span.
    """
    state0 = np.asarray(state0, dtype=float)
    spec = rsys.spec
    nf = normal_form(spec, rsys.mu)
    p0, x0 = rsys.split(state0)
    if np.linalg.norm(p0) > 1e-10:
        raise ValueError("state0 must be the turning point of the homoclinic orbit")
    offset = x0 - nf.center
    r_max = float(np.linalg.norm(offset))
    direction = offset / r_max
    a, b = rsys.pencil
    g0 = rsys.g(nf.center)
    g_turn = rsys.g(x0)
    if abs(abs(g0) - 1.0) > 1e-8 or abs(g_turn + g0) > 1e-8:
        raise ValueError("state0 does not lie on a homoclinic separatrix")
    beta_h = 2.0 / r_max ** 2
    lam = np.sqrt(2.0 * beta_h)

    t_core = min(t_core, max(abs(tspan[0]), abs(tspan[1])))
    core = integrate(rsys, state0, (-t_core, t_core), tol=tol)
    p_core, x_core = rsys.split(core(t_core))
    r_core = float(np.linalg.norm(x_core - nf.center))

    def xfun(t: float) -> np.ndarray:
        if abs(t) <= t_core:
            return rsys.split(core(t))[1]
        r = r_core * np.exp(-lam * (abs(t) - t_core))
        return nf.center + r * direction

    def pfun(t: float) -> np.ndarray:
        if abs(t) <= t_core:
            return rsys.split(core(t))[0]
        r = r_core * np.exp(-lam * (abs(t) - t_core))
        return -np.sign(t) * lam * r * direction

    def rhs(t: float, _theta: np.ndarray) -> np.ndarray:
        x = xfun(t)
        g = rsys.g(x)
        return np.concatenate([[g], g * spec.eval_polys(x)])

    theta_traj = integrate(
        _QuadratureSystem(rhs), np.zeros(spec.theta_dim), tspan, tol=tol, anchor=0.0
    )
    return GroupGeodesic(spec, rsys.mu, rsys.pencil, xfun, pfun, theta_traj, tspan)


@dataclass
class MagneticGeodesic:
    """Geodesic of the magnetic space R^{n+2}_F: data (x(t), y(t), z(t)).

    ``f_of_x`` evaluates the magnetic polynomial F; the horizontal momentum
    p(t) completes the unit-speed relation |p|^2 + G(x)^2 = 1.
    """

    n: int
    tspan: tuple[float, float]
    xfun: Callable[[float], np.ndarray]
    pfun: Callable[[float], np.ndarray]
    yfun: Callable[[float], float]
    zfun: Callable[[float], float]
    f_of_x: Callable[[np.ndarray], float]
    pencil: tuple[float, float]

    def g_of_x(self, x: np.ndarray) -> float:
        a, b = self.pencil
        return a + b * self.f_of_x(x)

    def state(self, t: float) -> np.ndarray:
        return np.concatenate([self.xfun(t), [self.yfun(t), self.zfun(t)]])

    def hamiltonian(self, t: float) -> float:
        p = self.pfun(t)
        g = self.g_of_x(self.xfun(t))
        return 0.5 * float(p @ p) + 0.5 * g * g

    def pfaffian_residual(self, n_samples: int = 401, h: float = 3e-3) -> float:
        """Max |z' - F(x) y'| with derivatives from 4th-order differences."""
        t_lo, t_hi = self.tspan
        pad = 2.5 * h
        ts = np.linspace(t_lo + pad, t_hi - pad, n_samples)

        def d4(fn, t):
            return (
                -fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)
            ) / (12 * h)

        worst = 0.0
        for t in ts:
            ydot = d4(self.yfun, t)
            zdot = d4(self.zfun, t)
            worst = max(worst, abs(zdot - self.f_of_x(self.xfun(t)) * ydot))
        return worst

    def to_csv(self, path, n: int = 2001) -> None:
        ts = np.linspace(self.tspan[0], self.tspan[1], n)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.n)] + ["y", "z", "H"])
            for t in ts:
                x = self.xfun(t)
                row = [f"{t:.12g}"] + [f"{v:.12g}" for v in x]
                row += [f"{self.yfun(t):.12g}", f"{self.zfun(t):.12g}", f"{self.hamiltonian(t):.12g}"]
                writer.writerow(row)


def project_magnetic(geo: GroupGeodesic) -> MagneticGeodesic:
    """Projection (x, theta) -> (x, theta_0, sum a_k theta_k) of a group geodesic."""
    mu = np.asarray(geo.mu, dtype=float)
    f_poly = geo.spec.f_polynomial(mu)

    def yfun(t: float) -> float:
        return float(geo.theta_traj(t)[0])

    def zfun(t: float) -> float:
        return float(mu @ geo.theta_traj(t))

    return MagneticGeodesic(
        geo.spec.n, geo.tspan, geo.xfun, geo.pfun, yfun, zfun,
        lambda x: f_poly(x), geo.pencil,
    )


def magnetic_lift(
    spec: GroupSpec,
    mu: np.ndarray,
    c: MagneticGeodesic,
    theta0: np.ndarray | None = None,
    tol: float = 1e-10,
) -> GroupGeodesic:
    """Horizontal lift gamma' = sum x_i' X_i + G(x(t)) Y of a magnetic geodesic."""
    mu = np.asarray(mu, dtype=float)
    if theta0 is None:
        theta0 = np.zeros(spec.theta_dim)

    def rhs(t: float, _theta: np.ndarray) -> np.ndarray:
        x = c.xfun(t)
        g = c.g_of_x(x)
        return np.concatenate([[g], g * spec.eval_polys(x)])

    anchor = 0.0 if c.tspan[0] <= 0.0 <= c.tspan[1] else c.tspan[0]
    theta_traj = integrate(_QuadratureSystem(rhs), np.asarray(theta0, dtype=float), c.tspan, tol=tol, anchor=anchor)
    return GroupGeodesic(spec, mu, c.pencil, c.xfun, c.pfun, theta_traj, c.tspan)


def magnetic_from_radial(
    radial: RadialSystem,
    p_r0: float,
    r0: float,
    tspan: tuple[float, float],
    phi0: float = 0.0,
    tol: float = 1e-10,
    anchor: float | None = None,
) -> MagneticGeodesic:
    """Magnetic geodesic of a rotationally invariant space from radial data.

    The plane coordinates are x = r (cos phi, sin phi) with phi' = ell / r^2.
    """
    state0 = np.array([p_r0, r0, phi0, 0.0, 0.0])

    class _Radial:
        def __init__(self, radial):
            self.radial = radial

        def rhs(self, t, s):
            return self.radial.rhs_magnetic(t, s)

        def hamiltonian(self, s):
            return self.radial.hamiltonian(s[:2])

    traj = integrate(_Radial(radial), state0, tspan, tol=tol, anchor=anchor)

    def xfun(t: float) -> np.ndarray:
        p_r, r, phi, _, _ = traj(t)
        return np.array([r * np.cos(phi), r * np.sin(phi)])

    def pfun(t: float) -> np.ndarray:
        p_r, r, phi, _, _ = traj(t)
        tang = radial.ell / r
        return np.array(
            [p_r * np.cos(phi) - tang * np.sin(phi), p_r * np.sin(phi) + tang * np.cos(phi)]
        )

    def yfun(t: float) -> float:
        return float(traj(t)[3])

    def zfun(t: float) -> float:
        return float(traj(t)[4])

    def f_of_x(x: np.ndarray) -> float:
        return radial.alpha + radial.beta * float(x @ x)

    mg = MagneticGeodesic(2, tspan, xfun, pfun, yfun, zfun, f_of_x, radial.pencil)
    mg.radial_traj = traj  # type: ignore[attr-defined]
    return mg
