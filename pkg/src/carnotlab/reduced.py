"""Reduced Hamiltonian dynamics on the horizontal slice.

Fixing the theta momenta mu = (a0, a1, ..) turns the geodesic flow into a
classical system on T*R^n with Hamiltonian

    H_G(p, x) = |p|^2 / 2 + G(x)^2 / 2,        G = a + b F_mu,

where F_mu(x) = a0 + sum a_k P_k(x) and (a, b) is a pencil coefficient pair
(the plain reduction is the pencil (0, 1)).  Geodesics of unit speed live on
the level H_G = 1/2, so the classical Hill region is {|G| <= 1}.

For rotationally invariant F (Engel-type groups, and the invariant axes of
the other models) the system reduces further to one radial degree of freedom
with effective potential V(r) = l^2 / r^2 + G(r)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import GroupSpec, Polynomial

__all__ = [
    "ReducedSystem",
    "NormalForm",
    "RadialSystem",
    "HillData",
    "EmptyHillError",
    "normal_form",
    "radial_from_momentum",
    "angular_momentum",
    "hill_radial",
    "equilibria",
]


class EmptyHillError(ValueError):
    """The classical region {V <= 1} contains no admissible radii."""


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced Hamiltonian system for a momentum mu and pencil (a, b)."""

    spec: GroupSpec
    mu: np.ndarray
    pencil: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "_f_poly", self.spec.f_polynomial(mu))

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def f_poly(self) -> Polynomial:
        return self._f_poly  # type: ignore[attr-defined]

    def f(self, x: np.ndarray) -> float:
        return self.f_poly(x)

    def grad_f(self, x: np.ndarray) -> np.ndarray:
        return self.f_poly.grad(x)

    def g(self, x: np.ndarray) -> float:
        a, b = self.pencil
        return a + b * self.f_poly(x)

    def grad_g(self, x: np.ndarray) -> np.ndarray:
        return self.pencil[1] * self.f_poly.grad(x)

    # state layout: (p_1..p_n, x_1..x_n)
    def split(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        state = np.asarray(state, dtype=float)
        return state[: self.n], state[self.n :]

    def hamiltonian(self, state: np.ndarray) -> float:
        p, x = self.split(state)
        return 0.5 * float(p @ p) + 0.5 * self.g(x) ** 2

    def rhs(self, t: float, state: np.ndarray) -> np.ndarray:
        p, x = self.split(state)
        return np.concatenate([-self.g(x) * self.grad_g(x), p])

    def state_on_shell(self, x: np.ndarray, p_dir: np.ndarray) -> np.ndarray:
        """Unit-speed initial state at x with momentum along p_dir."""
        x = np.asarray(x, dtype=float)
        p_dir = np.asarray(p_dir, dtype=float)
        g = self.g(x)
        pnorm_sq = 1.0 - g * g
        if pnorm_sq < -1e-12:
            raise ValueError("point lies outside the Hill region {|G| <= 1}")
        pnorm_sq = max(pnorm_sq, 0.0)
        norm = np.linalg.norm(p_dir)
        if norm == 0.0:
            if pnorm_sq > 1e-12:
                raise ValueError("interior point needs a momentum direction")
            p = np.zeros(self.n)
        else:
            p = p_dir / norm * np.sqrt(pnorm_sq)
        return np.concatenate([p, x])


# -- normal forms -----------------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """Affine change of variables x~ = rot @ (x - center) diagonalizing F.

    kind 'radial'     : F = alpha + beta |x~|^2          (eng)
    kind 'hyperbolic' : F = alpha + beta (x~2^2 - x~1^2) (n631)
    kind 'diagonal'   : F = alpha + beta1 x~1^2 + beta2 x~2^2 (g357)
    """

    kind: str
    alpha: float
    betas: tuple[float, ...]
    center: np.ndarray
    rot: np.ndarray

    def to_normal(self, x: np.ndarray) -> np.ndarray:
        return self.rot @ (np.asarray(x, dtype=float) - self.center)

    def from_normal(self, xt: np.ndarray) -> np.ndarray:
        return self.rot.T @ np.asarray(xt, dtype=float) + self.center

    def f_normal(self, xt: np.ndarray) -> float:
        xt = np.asarray(xt, dtype=float)
        if self.kind == "radial":
            return self.alpha + self.betas[0] * float(xt @ xt)
        if self.kind == "hyperbolic":
            return self.alpha + self.betas[0] * (xt[1] ** 2 - xt[0] ** 2)
        if self.kind == "diagonal":
            return self.alpha + self.betas[0] * xt[0] ** 2 + self.betas[1] * xt[1] ** 2
        raise ValueError(f"unknown normal form kind {self.kind!r}")

    def residual(self, f_poly: Polynomial, samples: int = 64, seed: int = 0) -> float:
        """Max pointwise identity defect |F(x) - F~(x~)| over random samples."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            x = rng.uniform(-2.0, 2.0, size=len(self.center))
            worst = max(worst, abs(f_poly(x) - self.f_normal(self.to_normal(x))))
        return worst


def normal_form(spec: GroupSpec, mu: np.ndarray) -> NormalForm:
    """Eliminate the linear part of F_mu by an affine change of variables."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (spec.momentum_dim,):
        raise ValueError("momentum has wrong length for this model")
    if spec.name == "eng":
        n = spec.n
        a_lin = mu[1 : n + 1]
        a_top = mu[n + 1]
        if a_top == 0.0:
            raise ValueError("normal form needs a nonzero top coefficient")
        center = -a_lin / a_top
        alpha = mu[0] - float(a_lin @ a_lin) / (2.0 * a_top)
        return NormalForm("radial", alpha, (a_top / 2.0,), center, np.eye(n))
    if spec.name == "n631":
        a0, a1, a2, a3 = mu
        if a3 == 0.0:
            raise ValueError("normal form needs a nonzero top coefficient")
        # F = alpha + a3 (x1 + a2/a3)(x2 + a1/a3); the product form is then
        # rotated by 45 degrees onto a difference of squares
        center = np.array([-a2 / a3, -a1 / a3])
        alpha = a0 - a1 * a2 / a3
        s = 1.0 / np.sqrt(2.0)
        rot = np.array([[-s, s], [s, s]])
        return NormalForm("hyperbolic", alpha, (a3 / 2.0,), center, rot)
    if spec.name == "g357":
        a0, a1, a2, a3, a4 = mu
        if a3 == 0.0 or a4 == 0.0:
            raise ValueError("normal form needs nonzero quadratic coefficients")
        center = np.array([-a1 / a3, -a2 / a4])
        alpha = a0 - a1 ** 2 / (2.0 * a3) - a2 ** 2 / (2.0 * a4)
        return NormalForm("diagonal", alpha, (a3 / 2.0, a4 / 2.0), center, np.eye(2))
    raise ValueError(f"no normal form implemented for model {spec.name!r}")


# -- radial reduction -------------------------------------------------------

@dataclass(frozen=True)
class RadialSystem:
    """One-dimensional effective system with F(r) = alpha + beta r^2.

    The pencil polynomial is G(r) = a + b F(r) and the effective potential
    V(r) = ell^2 / r^2 + G(r)^2; unit-speed orbits satisfy p^2 + V = 1.
    """

    alpha: float
    beta: float
    ell: float = 0.0
    pencil: tuple[float, float] = (0.0, 1.0)

    @property
    def g0(self) -> float:
        return self.pencil[0] + self.pencil[1] * self.alpha

    @property
    def g2(self) -> float:
        return self.pencil[1] * self.beta

    def f(self, r):
        return self.alpha + self.beta * np.asarray(r, dtype=float) ** 2

    def g(self, r):
        return self.g0 + self.g2 * np.asarray(r, dtype=float) ** 2

    def v(self, r):
        r = np.asarray(r, dtype=float)
        out = self.g(r) ** 2
        if self.ell != 0.0:
            out = out + self.ell ** 2 / r ** 2
        return out

    def w(self, r):
        """Classical factor W = 1 - V; orbits live where W >= 0.

        Evaluated as (1 - G)(1 + G) - ell^2 / r^2 with the 1 -/+ g0 terms
        combined symbolically, which stays accurate near an equilibrium at
        r = 0 where 1 - G^2 underflows in the naive form.
        """
        r = np.asarray(r, dtype=float)
        s = r ** 2
        one_minus_g = (1.0 - self.g0) - self.g2 * s
        one_plus_g = (1.0 + self.g0) + self.g2 * s
        out = one_minus_g * one_plus_g
        if self.ell != 0.0:
            out = out - self.ell ** 2 / s
        return out

    def hamiltonian(self, state: np.ndarray) -> float:
        p, r = state[0], state[1]
        return 0.5 * p * p + 0.5 * float(self.v(r))

    def rhs(self, t: float, state: np.ndarray) -> np.ndarray:
        p, r = state
        force = -2.0 * self.g2 * r * self.g(r)
        if self.ell != 0.0:
            force += self.ell ** 2 / r ** 3
        return np.array([force, p])

    def rhs_magnetic(self, t: float, state: np.ndarray) -> np.ndarray:
        """Extended state (p_r, r, phi, y, z) tracking the magnetic plane.

        x = r (cos phi, sin phi), y' = G, z' = G F.
        """
        p, r = state[0], state[1]
        base = self.rhs(t, state[:2])
        g = float(self.g(r))
        f = float(self.f(r))
        phi_dot = self.ell / r ** 2 if self.ell != 0.0 else 0.0
        return np.array([base[0], base[1], phi_dot, g, g * f])


def radial_from_momentum(
    spec: GroupSpec, mu: np.ndarray, ell: float = 0.0, pencil: tuple[float, float] = (0.0, 1.0)
) -> RadialSystem:
    """Radial system of an Engel-type momentum (after centering)."""
    nf = normal_form(spec, mu)
    if nf.kind != "radial":
        raise ValueError("radial reduction needs a rotationally invariant F")
    return RadialSystem(nf.alpha, nf.betas[0], ell, pencil)


def angular_momentum(nf: NormalForm, state: np.ndarray, n: int) -> float:
    """Angular momentum about the normal-form center (planar systems)."""
    if n != 2:
        raise ValueError("angular momentum scalar is defined for n = 2")
    p, x = state[:2], state[2:4]
    rel = np.asarray(x, dtype=float) - nf.center
    return float(rel[0] * p[1] - rel[1] * p[0])


# -- Hill intervals ---------------------------------------------------------

@dataclass(frozen=True)
class HillData:
    """Connected component of {V <= 1} in the radial variable.

    ``orders`` give the vanishing order of W = 1 - V at each endpoint:
    0 means no root (the r = 0 axis endpoint of an ell = 0 system),
    1 a simple turning point, 2 an equilibrium endpoint (infinite time).
    """

    r_min: float
    r_max: float
    orders: tuple[int, int]
    kind: str = "interval"  # 'interval' or 'point'


def _positive_w_roots(radial: RadialSystem, tol: float) -> list[tuple[float, int]]:
    """Roots r > 0 of W with multiplicities, from the cubic in s = r^2."""
    g0, g2, ell = radial.g0, radial.g2, radial.ell
    if ell == 0.0:
        roots: list[tuple[float, int]] = []
        if g2 == 0.0:
            return roots
        for target in (+1.0, -1.0):
            s = (target - g0) / g2
            if s > tol:
                roots.append((np.sqrt(s), 1))
            elif abs(s) <= tol:
                # W has a double root at r = 0 (G(0) = +/-1)
                roots.append((0.0, 2))
        merged = _merge_close(sorted(roots), tol)
        return merged
    if g2 == 0.0:
        # linear in s: (1 - g0^2) s = ell^2
        if 1.0 - g0 ** 2 <= tol:
            return []
        s = ell ** 2 / (1.0 - g0 ** 2)
        return [(np.sqrt(s), 1)]
    coeffs = [-g2 ** 2, -2.0 * g0 * g2, 1.0 - g0 ** 2, -ell ** 2]
    s_roots = np.roots(coeffs)
    out = []
    for s in s_roots:
        if abs(s.imag) > 1e-8 * max(1.0, abs(s)):
            continue
        s = s.real
        if s <= tol:
            continue
        r = np.sqrt(s)
        r = _polish_root(radial, r, tol)
        out.append((r, 1))
    return _merge_close(sorted(out), tol)


def _polish_root(radial: RadialSystem, r: float, tol: float) -> float:
    for _ in range(50):
        w = float(radial.w(r))
        h = 1e-7 * max(1.0, abs(r))
        dw = (float(radial.w(r + h)) - float(radial.w(r - h))) / (2.0 * h)
        if dw == 0.0:
            break
        step = w / dw
        r -= step
        if abs(step) < tol * max(1.0, abs(r)):
            break
    return r


def _merge_close(roots: list[tuple[float, int]], tol: float) -> list[tuple[float, int]]:
    merged: list[tuple[float, int]] = []
    for r, m in roots:
        if merged and abs(r - merged[-1][0]) < 1e3 * tol * max(1.0, abs(r)):
            prev_r, prev_m = merged[-1]
            merged[-1] = ((prev_r + r) / 2.0, prev_m + m)
        else:
            merged.append((r, m))
    return merged


def hill_radial(radial: RadialSystem, tol: float = 1e-12) -> HillData:
    """Hill interval of the effective potential on the unit energy shell."""
    roots = _positive_w_roots(radial, tol)
    ell = radial.ell

    candidates: list[HillData] = []
    if ell == 0.0:
        w0 = 1.0 - radial.g0 ** 2
        axis_order = 0
        if abs(radial.g0) - 1.0 > tol and not roots:
            raise EmptyHillError("G(0)^2 > 1 and no admissible radii")
        if roots and abs(roots[0][0]) < 1e-9:
            # homoclinic structure: equilibrium endpoint at the origin
            axis_root = roots.pop(0)
            axis_order = axis_root[1]
            w0 = 0.0
        if w0 >= -tol:
            if not roots:
                candidates.append(HillData(0.0, np.inf, (axis_order, 0)))
            else:
                candidates.append(HillData(0.0, roots[0][0], (axis_order, roots[0][1])))
        else:
            if len(roots) >= 2:
                candidates.append(HillData(roots[0][0], roots[1][0], (roots[0][1], roots[1][1])))
    else:
        if not roots:
            raise EmptyHillError("effective potential exceeds 1 for all radii")
        if len(roots) == 1:
            r, m = roots[0]
            if m >= 2:
                candidates.append(HillData(r, r, (m, m), kind="point"))
            elif float(radial.w(2.0 * r)) > 0.0:
                # potential decays past the turning point (linear F case)
                candidates.append(HillData(r, np.inf, (m, 0)))
        else:
            for (r1, m1), (r2, m2) in zip(roots, roots[1:]):
                mid = 0.5 * (r1 + r2)
                if float(radial.w(mid)) > 0.0:
                    candidates.append(HillData(r1, r2, (m1, m2)))

    if not candidates:
        raise EmptyHillError("no Hill interval on the unit energy shell")
    if len(candidates) > 1:
        # G is monotone in r^2 so this cannot happen for the built-in models
        raise EmptyHillError("ambiguous Hill region")
    hill = candidates[0]
    if hill.kind == "interval" and np.isfinite(hill.r_max):
        mid = 0.5 * (hill.r_min + hill.r_max) if hill.r_min > 0 else 0.5 * hill.r_max
        if float(radial.w(mid)) < -tol:
            raise EmptyHillError("interval interior is classically forbidden")
    return hill


# -- equilibria -------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    r: float
    kind: str  # 'homoclinic-origin', 'critical-radius', 'relative-equilibrium'
    on_shell: bool
    branch: int = 0  # sign of G at the equilibrium for the origin case


def equilibria(radial: RadialSystem, tol: float = 1e-12) -> list[Equilibrium]:
    """Equilibria of the radial system relevant to the unit shell.

    ell = 0: the origin is an equilibrium; it sits on the unit shell iff
    G(0) = +/-1, and the orbit through the Hill interval is then homoclinic
    (G of the form +/-(1 - beta_h r^2), Hill interval [0, sqrt(2/beta_h)]).

    ell != 0: the unique critical radius of V, found by monotone bisection of
    V' on (0, inf); it is a relative equilibrium iff V(r*) = 1.
    """
    out: list[Equilibrium] = []
    if radial.ell == 0.0:
        g0 = radial.g0
        on_shell = abs(abs(g0) - 1.0) <= 1e-10
        kind = "homoclinic-origin" if on_shell and radial.g2 * g0 < 0 else "critical-radius"
        out.append(Equilibrium(0.0, kind, on_shell, int(np.sign(g0)) if on_shell else 0))
        return out

    def dv(r: float) -> float:
        return -2.0 * radial.ell ** 2 / r ** 3 + 4.0 * radial.g2 * r * float(radial.g(r))

    lo, hi = 1e-8, 1.0
    while dv(hi) < 0.0 and hi < 1e8:
        hi *= 2.0
    if dv(hi) < 0.0:
        return out
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dv(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    r_star = 0.5 * (lo + hi)
    on_shell = abs(float(radial.v(r_star)) - 1.0) <= 1e-8
    out.append(Equilibrium(r_star, "relative-equilibrium" if on_shell else "critical-radius", on_shell))
    return out
