"""Adaptive integration of the reduced flows with dense output.

The workhorse is an explicit adaptive embedded Runge-Kutta pair of order 8
with dense output (scipy's DOP853).  Initial conditions sit at an anchor time
inside the requested span (by default t = 0 when the span straddles it), so
two-sided spans are integrated backward and forward and glued into a single
dense interpolant.

Event location refines sign changes of a scalar functional along the dense
interpolant to 1e-10 in time; tangential touches of a boundary (local minima
of the absolute value below a threshold) are located separately, since no
sign change occurs there.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

__all__ = ["Trajectory", "EventRecord", "integrate", "find_events"]


class _GluedSolution:
    """Dense interpolant over [t_min, t_max] glued from one or two solves."""

    def __init__(self, pieces: list[tuple[float, float, Callable]]):
        # pieces: (t_lo, t_hi, interpolant) sorted by t_lo
        self.pieces = sorted(pieces, key=lambda p: p[0])

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = None
        for i, ti in enumerate(t_arr):
            for lo, hi, sol in self.pieces:
                if lo - 1e-12 <= ti <= hi + 1e-12:
                    val = np.asarray(sol(np.clip(ti, lo, hi)))
                    if out is None:
                        out = np.empty((len(t_arr), val.shape[0]))
                    out[i] = val
                    break
            else:
                raise ValueError(f"time {ti} outside the integrated span")
        assert out is not None
        return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out.T


@dataclass
class Trajectory:
    """Solution of a reduced flow with dense output and energy bookkeeping."""

    system: object
    t0: float
    t1: float
    anchor: float
    state0: np.ndarray
    sol: _GluedSolution
    tol: float
    energy_drift: float
    wall_time: float
    n_samples: int = 2001
    _grid: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, t):
        return self.sol(t)

    @property
    def tspan(self) -> tuple[float, float]:
        return (self.t0, self.t1)

    def sample_times(self, n: int | None = None) -> np.ndarray:
        return np.linspace(self.t0, self.t1, n or self.n_samples)

    def samples(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        ts = self.sample_times(n)
        return ts, self.sol(ts)

    def energy(self, t) -> float:
        return self.system.hamiltonian(self.sol(t))

    def to_csv(self, path, header: Sequence[str] | None = None, n: int | None = None) -> None:
        ts, states = self.samples(n)
        k = states.shape[0]
        if header is None:
            header = ["t"] + [f"s{i}" for i in range(k)] + ["H"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(ts):
                row = [f"{t:.12g}"] + [f"{v:.12g}" for v in states[:, i]]
                row.append(f"{self.system.hamiltonian(states[:, i]):.12g}")
                writer.writerow(row)


def integrate(
    system,
    state0: np.ndarray,
    tspan: tuple[float, float],
    tol: float = 1e-10,
    anchor: float | None = None,
    method: str = "DOP853",
    rhs: Callable | None = None,
) -> Trajectory:
    """Integrate ``system.rhs`` over tspan with the IC placed at the anchor.

    The anchor defaults to 0 when the span straddles 0, else to tspan[0].
    """
    t_lo, t_hi = float(tspan[0]), float(tspan[1])
    if t_hi < t_lo:
        raise ValueError("tspan must be increasing")
    if anchor is None:
        anchor = 0.0 if t_lo <= 0.0 <= t_hi else t_lo
    if not (t_lo <= anchor <= t_hi):
        raise ValueError("anchor outside tspan")
    state0 = np.asarray(state0, dtype=float)
    fun = rhs if rhs is not None else system.rhs

    started = time.perf_counter()
    pieces: list[tuple[float, float, Callable]] = []
    for target in (t_lo, t_hi):
        if target == anchor:
            continue
        res = solve_ivp(
            fun,
            (anchor, target),
            state0,
            method=method,
            rtol=tol,
            atol=tol,
            dense_output=True,
        )
        if not res.success:
            raise RuntimeError(f"integration failed: {res.message}")
        pieces.append((min(anchor, target), max(anchor, target), res.sol))
    if not pieces:
        pieces.append((anchor, anchor, lambda t, s0=state0: s0))
    sol = _GluedSolution(pieces)
    wall = time.perf_counter() - started

    traj = Trajectory(system, t_lo, t_hi, anchor, state0, sol, tol, 0.0, wall)
    if hasattr(system, "hamiltonian"):
        ts, states = traj.samples()
        h0 = system.hamiltonian(state0)
        drift = max(abs(system.hamiltonian(states[:, i]) - h0) for i in range(len(ts)))
        traj.energy_drift = drift
    return traj


@dataclass(frozen=True)
class EventRecord:
    t: float
    value: float
    kind: str  # 'crossing' or 'touch'


def find_events(
    traj: Trajectory,
    fn: Callable[[float, np.ndarray], float],
    tol: float = 1e-10,
    touch_tol: float = 1e-8,
    n_scan: int = 4001,
) -> list[EventRecord]:
    """Zeros and tangential touches of ``fn(t, state(t))`` along a trajectory.

    Sign changes on a scan grid are refined with Brent's method to ``tol`` in
    time.  Local minima of |fn| that dip below ``touch_tol`` without a sign
    change are reported as touches.
    """
    ts = traj.sample_times(n_scan)
    vals = np.array([fn(t, traj.sol(t)) for t in ts])
    events: list[EventRecord] = []

    def f_scalar(t: float) -> float:
        return fn(t, traj.sol(t))

    for i in range(len(ts) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            # exact zero on the grid: a touch unless the sign actually flips
            prev = vals[i - 1] if i > 0 else -b
            kind = "touch" if prev * b > 0.0 else "crossing"
            events.append(EventRecord(ts[i], 0.0, kind))
        elif a * b < 0.0:
            t_root = brentq(f_scalar, ts[i], ts[i + 1], xtol=tol)
            events.append(EventRecord(t_root, f_scalar(t_root), "crossing"))

    absvals = np.abs(vals)
    for i in range(1, len(ts) - 1):
        if absvals[i] <= absvals[i - 1] and absvals[i] < absvals[i + 1]:
            res = minimize_scalar(
                lambda t: abs(f_scalar(t)),
                bounds=(ts[i - 1], ts[i + 1]),
                method="bounded",
                options={"xatol": tol},
            )
            if res.fun <= touch_tol:
                t_touch = float(res.x)
                # skip minima that are actually crossings found above
                if not any(abs(e.t - t_touch) < 50 * (ts[1] - ts[0]) for e in events):
                    events.append(EventRecord(t_touch, f_scalar(t_touch), "touch"))
    events.sort(key=lambda e: e.t)
    deduped: list[EventRecord] = []
    for e in events:
        if deduped and abs(e.t - deduped[-1].t) < max(tol * 10, 1e-9):
            continue
        deduped.append(e)
    return deduped
