"""Metabelian Carnot group models in exponential coordinates of the second kind.

A model is described by a list of frame polynomials P_k(x) on the horizontal
slice R^n.  A point carries a theta block (theta_0 followed by one coordinate
per frame polynomial, layer-2 entries before layer-3 entries) and an x block.
The horizontal frame is

    X_i = d/dx_i,      Y = d/dtheta_0 + sum_k P_k(x) d/dtheta_k,

with P_k homogeneous of degree (layer - 1).  Built-in models:

* ``eng(n)``   : P_i = x_i (i = 1..n), P_{n+1} = |x|^2 / 2
* ``n631()``   : P_1 = x_1, P_2 = x_2, P_3 = x_1 x_2
* ``g357()``   : P_1 = x_1, P_2 = x_2, P_3 = x_1^2 / 2, P_4 = x_2^2 / 2
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Polynomial",
    "GroupSpec",
    "GroupPoint",
    "eng",
    "n631",
    "g357",
    "frame_velocity",
    "dilate",
    "rotate",
    "rotate_momentum",
    "reflect",
]


@dataclass(frozen=True)
class Polynomial:
    """Sparse multivariate polynomial: maps exponent tuples to coefficients."""

    nvars: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    @classmethod
    def from_dict(cls, nvars: int, terms: Mapping[tuple[int, ...], float]) -> "Polynomial":
        clean = tuple(sorted((tuple(e), float(c)) for e, c in terms.items() if c != 0.0))
        return cls(nvars, clean)

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for expo, coeff in self.terms:
            term = coeff
            for xi, ei in zip(x, expo):
                if ei:
                    term *= xi ** ei
            total += term
        return total

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.nvars)
        for expo, coeff in self.terms:
            for i, ei in enumerate(expo):
                if ei == 0:
                    continue
                term = coeff * ei
                for j, ej in enumerate(expo):
                    e = ej - 1 if j == i else ej
                    if e:
                        term *= x[j] ** e
                g[i] += term
        return g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = np.zeros((self.nvars, self.nvars))
        for expo, coeff in self.terms:
            for i, ei in enumerate(expo):
                if ei == 0:
                    continue
                for j, ej in enumerate(expo):
                    eij = list(expo)
                    factor = coeff * ei
                    eij[i] -= 1
                    if eij[j] == 0:
                        continue
                    factor *= eij[j]
                    eij[j] -= 1
                    term = factor
                    for k, ek in enumerate(eij):
                        if ek:
                            term *= x[k] ** ek
                    h[i, j] += term
        return h

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.nvars, tuple((e, factor * c) for e, c in self.terms))

    @staticmethod
    def add(polys: Iterable["Polynomial"], nvars: int) -> "Polynomial":
        acc: dict[tuple[int, ...], float] = {}
        for p in polys:
            for e, c in p.terms:
                acc[e] = acc.get(e, 0.0) + c
        return Polynomial.from_dict(nvars, acc)

    @staticmethod
    def constant(nvars: int, value: float) -> "Polynomial":
        if value == 0.0:
            return Polynomial(nvars, ())
        return Polynomial(nvars, (((0,) * nvars, float(value)),))


@dataclass(frozen=True)
class GroupSpec:
    """Structure constants of a metabelian Carnot group model.

    ``polys[k]`` is the frame polynomial attached to theta_{k+1}; its dilation
    weight is degree + 1 (so layer-2 coordinates have weight 2, layer-3
    coordinates weight 3).  theta_0 and all x_i have weight 1.
    """

    name: str
    n: int
    polys: tuple[Polynomial, ...]

    @property
    def theta_dim(self) -> int:
        return 1 + len(self.polys)

    @property
    def dim(self) -> int:
        return self.n + self.theta_dim

    @property
    def momentum_dim(self) -> int:
        # one dual coefficient per theta coordinate
        return self.theta_dim

    @property
    def theta_weights(self) -> tuple[int, ...]:
        return (1,) + tuple(p.degree + 1 for p in self.polys)

    def eval_polys(self, x: np.ndarray) -> np.ndarray:
        return np.array([p(x) for p in self.polys])

    def f_polynomial(self, mu: np.ndarray) -> Polynomial:
        """F_mu(x) = a0 + sum_k a_k P_k(x) for mu = (a0, a1, ..)."""
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.momentum_dim,):
            raise ValueError(
                f"momentum for {self.name} must have length {self.momentum_dim}, got {mu.shape}"
            )
        parts = [Polynomial.constant(self.n, mu[0])]
        parts += [p.scale(a) for p, a in zip(self.polys, mu[1:])]
        return Polynomial.add(parts, self.n)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "n": self.n,
            "polys": [
                {"terms": [[list(e), c] for e, c in p.terms]} for p in self.polys
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroupSpec":
        payload = json.loads(text)
        n = int(payload["n"])
        polys = tuple(
            Polynomial(n, tuple((tuple(int(i) for i in e), float(c)) for e, c in p["terms"]))
            for p in payload["polys"]
        )
        return cls(str(payload["name"]), n, polys)


@dataclass
class GroupPoint:
    """Point of the group: theta block (theta_0, theta_1, ..) and x block."""

    theta: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=float)
        self.x = np.asarray(self.x, dtype=float)

    @classmethod
    def origin(cls, spec: GroupSpec) -> "GroupPoint":
        return cls(np.zeros(spec.theta_dim), np.zeros(spec.n))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.x])


# -- built-in models --------------------------------------------------------

def eng(n: int) -> GroupSpec:
    """Engel-type group of rank n + 1: filtration (n+1, n+2, n+3)."""
    if n < 1:
        raise ValueError("eng(n) needs n >= 1")
    unit = lambda i: Polynomial.from_dict(n, {tuple(1 if j == i else 0 for j in range(n)): 1.0})
    polys = [unit(i) for i in range(n)]
    polys.append(
        Polynomial.from_dict(
            n, {tuple(2 if j == i else 0 for j in range(n)): 0.5 for i in range(n)}
        )
    )
    return GroupSpec("eng", n, tuple(polys))


def n631() -> GroupSpec:
    """Rank-3 group with filtration (3, 5, 6) and P_3 = x_1 x_2."""
    polys = (
        Polynomial.from_dict(2, {(1, 0): 1.0}),
        Polynomial.from_dict(2, {(0, 1): 1.0}),
        Polynomial.from_dict(2, {(1, 1): 1.0}),
    )
    return GroupSpec("n631", 2, polys)


def g357() -> GroupSpec:
    """Rank-3 group with filtration (3, 5, 7): separate squares in layer 3."""
    polys = (
        Polynomial.from_dict(2, {(1, 0): 1.0}),
        Polynomial.from_dict(2, {(0, 1): 1.0}),
        Polynomial.from_dict(2, {(2, 0): 0.5}),
        Polynomial.from_dict(2, {(0, 2): 0.5}),
    )
    return GroupSpec("g357", 2, polys)


def make_model(name: str, n: int | None = None) -> GroupSpec:
    name = name.lower()
    if name == "eng":
        return eng(2 if n is None else n)
    if name == "n631":
        return n631()
    if name == "g357":
        return g357()
    raise ValueError(f"unknown model {name!r} (expected eng, n631 or g357)")


# -- frame, dilations, symmetries ------------------------------------------

def frame_velocity(spec: GroupSpec, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Velocity of the horizontal frame combination sum u_i X_i + u_{n+1} Y.

    Returns (theta_dot, x_dot) at a point with horizontal coordinates x.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.n + 1,):
        raise ValueError(f"control must have length {spec.n + 1}")
    x_dot = u[: spec.n].copy()
    uy = u[spec.n]
    theta_dot = np.concatenate([[uy], uy * spec.eval_polys(x)])
    return theta_dot, x_dot


def dilate(spec: GroupSpec, point: GroupPoint, lam: float) -> GroupPoint:
    """Carnot dilation delta_lam: coordinates scale by lam^weight."""
    w = np.array(spec.theta_weights, dtype=float)
    return GroupPoint(point.theta * lam ** w, point.x * lam)


def rotate(spec: GroupSpec, point: GroupPoint, q: np.ndarray) -> GroupPoint:
    """SO(n) isometry of the Engel-type groups.

    Acts by q on the x block and on the layer-2 theta block (theta_1..theta_n);
    theta_0 and theta_{n+1} are fixed.
    """
    if spec.name != "eng":
        raise ValueError("rotation isometries are implemented for eng(n) only")
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.n, spec.n):
        raise ValueError("rotation matrix has wrong shape")
    theta = point.theta.copy()
    theta[1 : spec.n + 1] = q @ point.theta[1 : spec.n + 1]
    return GroupPoint(theta, q @ point.x)


def rotate_momentum(spec: GroupSpec, mu: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Momentum transport under the SO(n) action: F_mu'(x) = F_mu(q^T x)."""
    if spec.name != "eng":
        raise ValueError("rotation isometries are implemented for eng(n) only")
    mu = np.asarray(mu, dtype=float)
    out = mu.copy()
    out[1 : spec.n + 1] = np.asarray(q, dtype=float) @ mu[1 : spec.n + 1]
    return out


def reflect(point: GroupPoint) -> GroupPoint:
    """Reflection fixing x and negating the whole theta block (sends Y to -Y)."""
    return GroupPoint(-point.theta, point.x.copy())
