"""Classification of reduced geodesic classes and optimality diagnostics.

The decision tree combines algebraic normal-form tests (saddle structure of
the pencil polynomial G, angular momentum about the center) with trajectory
probes (tail decay for homoclinic orbits, recurrence for radial periods).

Optimality diagnostics:

* ``maxwell_check``     : the reflected twin of an r-periodic geodesic meets
  it again after one radial period L, so the cut time is at most L.
* ``conjugate_check``   : touches of the Hill-set boundary {G = +/-1}; two
  consecutive touches of {G = 1} bound a conjugate pair.
* ``metric_line_condition`` : necessary condition for a geodesic to be a
  metric line, via the time-averaged control phi(T) = (1/T) Int_{-T}^{T} u.
  A metric line must achieve <v, phi(T)> -> 2 for some unit direction v.
* ``abnormal_family`` / ``is_abnormal`` : the two abnormal families (vertical
  lines, and horizontal curves lying in a level set of some F_lambda).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .integrate import Trajectory, find_events, integrate
from .models import GroupSpec
from .reconstruct import GroupGeodesic, MagneticGeodesic, magnetic_from_radial
from .reduced import (
    RadialSystem,
    ReducedSystem,
    angular_momentum,
    hill_radial,
    normal_form,
)
from .costmaps import radial_period

__all__ = [
    "GeodesicClass",
    "classify",
    "maxwell_check",
    "conjugate_check",
    "metric_line_condition",
    "abnormal_family",
    "is_abnormal",
]


@dataclass
class GeodesicClass:
    label: str
    details: dict = field(default_factory=dict)


def _axis_membership(xt: np.ndarray, pt: np.ndarray, tol: float) -> int | None:
    """Which normal-form axis (0 or 1) the planar state lives on, if any."""
    if abs(xt[1]) < tol and abs(pt[1]) < tol:
        return 0
    if abs(xt[0]) < tol and abs(pt[0]) < tol:
        return 1
    return None


def classify(
    rsys: ReducedSystem,
    state0: np.ndarray,
    horizon: float = 50.0,
    tol: float = 1e-9,
) -> GeodesicClass:
    """Classify the reduced geodesic through ``state0``."""
    state0 = np.asarray(state0, dtype=float)
    p0, x0 = rsys.split(state0)
    g_x0 = rsys.g(x0)
    grad_g0 = rsys.grad_g(x0)

    # stationary reduced state: the geodesic is a vertical line
    if np.linalg.norm(p0) < tol and abs(g_x0 * np.linalg.norm(grad_g0)) < tol:
        if abs(abs(g_x0) - 1.0) < 1e-8:
            return GeodesicClass("vertical-line", {"g": g_x0})

    # constant G: straight lines (possibly with a vertical component)
    f_poly = rsys.f_poly
    if f_poly.degree == 0 or rsys.pencil[1] == 0.0:
        return GeodesicClass("line", {"g": g_x0})

    if f_poly.degree == 1:
        # free motion plus a one-dimensional harmonic oscillation
        direction = rsys.grad_g(x0)
        direction = direction / np.linalg.norm(direction)
        p_par = float(p0 @ direction)
        h_osc = 0.5 * (p_par ** 2 + g_x0 ** 2)
        h_free = rsys.hamiltonian(state0) - h_osc
        if h_osc < tol:
            return GeodesicClass("line", {"h_free": h_free})
        return GeodesicClass("small-oscillation", {"h_free": h_free, "h_osc": h_osc})

    nf = normal_form(rsys.spec, rsys.mu)

    if nf.kind == "radial" and rsys.n == 2:
        ell = angular_momentum(nf, state0, rsys.n)
        radial = RadialSystem(nf.alpha, nf.betas[0], ell, rsys.pencil)
        g0, g2 = radial.g0, radial.g2
        details = {"ell": ell, "alpha": nf.alpha, "beta": nf.betas[0], "g0": g0, "g2": g2}
        if abs(ell) < tol:
            if abs(abs(g0) - 1.0) < 1e-8 and g2 * g0 < 0.0:
                details["branch"] = int(np.sign(g0))
                details["beta_h"] = -g2 / g0
                probe = _homoclinic_probe(rsys, state0, nf, horizon, details["beta_h"])
                details.update(probe)
                if probe["tail_ok"]:
                    return GeodesicClass("homoclinic", details)
                return GeodesicClass("generic", details)
            hill = hill_radial(radial)
            details["hill"] = (hill.r_min, hill.r_max)
            if np.isfinite(hill.r_max):
                return GeodesicClass("r-periodic", details)
            return GeodesicClass("generic", details)
        hill = hill_radial(radial)
        details["hill"] = (hill.r_min, hill.r_max)
        if hill.kind == "point":
            return GeodesicClass("r-circular", details)
        if np.isfinite(hill.r_max):
            return GeodesicClass("r-periodic", details)
        return GeodesicClass("generic", details)

    if nf.kind in ("hyperbolic", "diagonal"):
        xt = nf.to_normal(x0)
        pt = nf.rot @ p0
        axis = _axis_membership(xt, pt, 1e-9)
        details = {"alpha": nf.alpha, "betas": nf.betas, "axis": axis}
        if axis is not None:
            beta = nf.betas[0] if nf.kind == "hyperbolic" else nf.betas[axis]
            if nf.kind == "hyperbolic":
                f2 = beta if axis == 1 else -beta
            else:
                f2 = beta
            a, b = rsys.pencil
            g0 = a + b * nf.alpha
            g2 = b * f2
            details.update({"g0": g0, "g2": g2})
            if abs(abs(g0) - 1.0) < 1e-8 and g2 * g0 < 0.0:
                details["branch"] = int(np.sign(g0))
                details["beta_h"] = -g2 / g0
                probe = _homoclinic_probe(rsys, state0, nf, horizon, details["beta_h"])
                details.update(probe)
                if probe["tail_ok"]:
                    return GeodesicClass("homoclinic", details)
                return GeodesicClass("generic", details)
            if g2 != 0.0 and abs(g0) < 1.0:
                return GeodesicClass("r-periodic", details)
        return GeodesicClass("generic", details)

    return GeodesicClass("generic", {})


def _homoclinic_probe(
    rsys: ReducedSystem, state0: np.ndarray, nf, horizon: float, beta_h: float = 2.0
) -> dict:
    """Integrate both tails and check decay toward the saddle equilibrium.

    The probe horizon is capped by the saddle exponent sqrt(2 beta_h): past
    roughly 8 / lambda the exponential instability of the separatrix drowns
    the tail in integration error, so probing longer proves nothing.
    """
    lam = np.sqrt(2.0 * abs(beta_h))
    horizon = min(horizon, 8.0 / lam)
    traj = integrate(rsys, state0, (-horizon, horizon), tol=1e-12)
    mids, ends = [], []
    for sgn in (-1.0, 1.0):
        p_mid, x_mid = rsys.split(traj(sgn * horizon / 2.0))
        p_end, x_end = rsys.split(traj(sgn * horizon))
        mids.append(np.linalg.norm(p_mid) + np.linalg.norm(x_mid - nf.center))
        ends.append(np.linalg.norm(p_end) + np.linalg.norm(x_end - nf.center))
    tail_ok = all(e < 1e-2 and e <= m + 1e-12 for e, m in zip(ends, mids))
    return {"tail_ok": tail_ok, "tail_residual": max(ends)}


# -- Maxwell points ----------------------------------------------------------

def maxwell_check(radial: RadialSystem, r0: float | None = None, tol: float = 1e-12) -> dict:
    """Compare an r-periodic magnetic geodesic with its reflected twin.

    The twin starts at the same radius with the radial momentum negated.  Both
    return to the initial radius with the same angular and vertical advance
    after one radial period L, so c(L) = c~(L): the cut time is at most L.
    Returns the period data, the state gap at L and the gap at L / 2.
    """
    if radial.ell == 0.0:
        raise ValueError("the reflected twin needs nonzero angular momentum")
    period = radial_period(radial, tol)
    hill = period["hill"]
    if hill.kind == "point":
        raise ValueError("relative equilibrium has no radial period")
    L = period["L"]
    if r0 is None:
        r0 = 0.5 * (hill.r_min + hill.r_max)
    w0 = float(radial.w(r0))
    if w0 <= 0.0:
        raise ValueError("r0 must lie inside the Hill interval")
    p_r0 = np.sqrt(w0)

    c = magnetic_from_radial(radial, +p_r0, r0, (0.0, L), tol=1e-12)
    twin = magnetic_from_radial(radial, -p_r0, r0, (0.0, L), tol=1e-12)
    gap_at = lambda t: float(np.linalg.norm(c.state(t) - twin.state(t)))
    return {
        "L": L,
        "delta_phi": period["delta_phi"],
        "gap_at_L": gap_at(L),
        "gap_at_half": gap_at(L / 2.0),
        "t_cut_upper": L,
        "r0": r0,
    }


# -- conjugate points --------------------------------------------------------

def conjugate_check(
    rsys: ReducedSystem,
    traj: Trajectory,
    touch_tol: float = 1e-8,
    tol: float = 1e-10,
) -> dict:
    """Touches of the Hill-set boundary {G = +/-1} along a reduced trajectory.

    At a touch the horizontal momentum vanishes and F = (+/-1 - a) / b.  Two
    consecutive touches of the G = 1 boundary bound a conjugate pair.
    """
    a, b = rsys.pencil
    x_of = lambda t, s: rsys.split(s)[1]

    # degenerate: G identically +/-1 along the curve (vertical line)
    ts_probe = traj.sample_times(32)
    gs = np.array([rsys.g(x_of(t, traj(t))) for t in ts_probe])
    if np.all(np.abs(np.abs(gs) - 1.0) < 1e-12):
        return {"degenerate": True, "touches": [], "conjugate_pairs": []}

    touches = []
    for sign in (+1.0, -1.0):
        fn = lambda t, s, sign=sign: rsys.g(x_of(t, s)) - sign
        for e in find_events(traj, fn, tol=tol, touch_tol=touch_tol):
            p, x = rsys.split(traj(e.t))
            touches.append(
                {
                    "t": e.t,
                    "boundary": int(sign),
                    "kind": e.kind,
                    "p_norm": float(np.linalg.norm(p)),
                    "f_value": rsys.f(x),
                    "f_expected": (sign - a) / b if b != 0.0 else None,
                }
            )
    touches.sort(key=lambda d: d["t"])
    pairs = []
    for sign in (+1, -1):
        same = [d for d in touches if d["boundary"] == sign]
        pairs.extend((u["t"], v["t"]) for u, v in zip(same, same[1:]))
    pairs.sort()
    return {"degenerate": False, "touches": touches, "conjugate_pairs": pairs}


# -- metric-line necessary condition ----------------------------------------

def metric_line_condition(
    geo: GroupGeodesic,
    T: float,
    v: np.ndarray | None = None,
    n_quad: int = 4001,
) -> dict:
    """Averaged-control estimate for the metric-line necessary condition.

    phi(T) = (1/T) Int_{-T}^{T} u(s) ds.  Without ``v`` the best unit
    direction phi / |phi| is used, giving the estimate |phi(T)|; a metric
    line must drive the estimate to 2 as T grows.  With ``v`` the projected
    estimate <v, phi(T)> is returned instead.
    """
    ts = np.linspace(-T, T, n_quad)
    us = np.array([geo.controls(t) for t in ts])
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    phi = trapezoid(us, ts, axis=0) / T
    norm = float(np.linalg.norm(phi))
    best_v = phi / norm if norm > 0 else phi
    if v is None:
        estimate = norm
    else:
        v = np.asarray(v, dtype=float)
        estimate = float(v @ phi)
    return {
        "phi": phi,
        "estimate": estimate,
        "best_v": best_v,
        "deficit": 2.0 - estimate,
    }


# -- abnormal geodesics ------------------------------------------------------

def abnormal_family(spec: GroupSpec) -> dict:
    """Descriptions of the two abnormal families of a metabelian model.

    vertical  : curves tangent to Y at a point x* that is critical for some
                nonzero combination F_lambda = sum lambda_k P_k.
    horizontal: curves with u_Y = 0 whose x-trace lies in a level set of a
                nonconstant F_lambda (straight lines for linear combinations;
                spheres / hyperbolas for the quadratic layer-3 polynomials).
    """
    return {
        "vertical": {
            "condition": "grad of some nonzero sum(lambda_k P_k) vanishes at x*",
            "controls": "u = (0, .., 0, 1)",
        },
        "horizontal": {
            "condition": "u_Y = 0 and x(t) in a level set of some nonconstant F_lambda",
            "level_sets": [
                {"terms": [[list(e), c] for e, c in p.terms]} for p in spec.polys
            ],
        },
    }


def is_abnormal(
    spec: GroupSpec,
    xs: Sequence[np.ndarray],
    us: Sequence[np.ndarray],
    tol: float = 1e-8,
) -> dict:
    """Membership test against the two abnormal families.

    ``xs`` are samples of the horizontal trace, ``us`` the unit controls.
    """
    xs = [np.asarray(x, dtype=float) for x in xs]
    us = [np.asarray(u, dtype=float) for u in us]
    u_y = max(abs(float(u[-1])) for u in us)
    x_spread = max(float(np.linalg.norm(x - xs[0])) for x in xs)

    if x_spread < tol:
        # vertical candidate: need a nonzero lambda with grad F_lambda(x*) = 0
        grads = np.column_stack([p.grad(xs[0]) for p in spec.polys])
        sv = np.linalg.svd(grads, compute_uv=False)
        degenerate = len(spec.polys) > spec.n or (sv.size and sv[-1] < tol)
        return {"abnormal": bool(degenerate), "family": "vertical" if degenerate else None}

    if u_y < tol:
        # horizontal candidate: fit lambda with F_lambda constant on the trace
        rows = np.array([[p(x) - p(xs[0]) for p in spec.polys] for x in xs[1:]])
        sv = np.linalg.svd(rows, compute_uv=False)
        fits = sv.size == 0 or sv[-1] < tol * max(1.0, sv[0]) or rows.shape[0] < rows.shape[1]
        if fits:
            return {"abnormal": True, "family": "horizontal"}
        return {"abnormal": False, "family": None}

    return {"abnormal": False, "family": None}
