"""Command-line experiment runner.

Subcommands::

    geodesic   integrate a reduced geodesic, reconstruct and project it,
               and write the magnetic trace as CSV (t, x.., y, z, H)
    costmap    displacement / cost report for a window, by the time-domain
               and (for radial classes) quadrature routes
    classify   classify the geodesic through an initial condition
    sweep      parameter sweep of the radial invariants
               (CSV: param, Theta1, Theta2, L, dtheta)
    verify     self-check suite for a configuration (exit 1 on failure)

Flags may also be provided through ``--config FILE`` holding flat KEY=VALUE
lines; explicit flags override the file.  Exit codes: 0 success, 1
computation or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .classify import (
    classify as classify_state,
    conjugate_check,
    maxwell_check,
    metric_line_condition,
)
from .costmaps import delta_cost_quadrature, delta_cost_time, period_theta, radial_period
from .integrate import integrate
from .models import make_model
from .reconstruct import magnetic_from_radial, project_magnetic, reconstruct
from .reduced import (
    EmptyHillError,
    RadialSystem,
    ReducedSystem,
    angular_momentum,
    normal_form,
)
from .values import is_divergent, value_to_jsonable

__all__ = [
    "main",
    "cmd_geodesic",
    "cmd_costmap",
    "cmd_classify",
    "cmd_sweep",
    "cmd_verify",
]


class UsageError(Exception):
    pass


def _parse_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise UsageError(f"expected comma-separated floats, got {text!r}") from exc


def _load_config(path: str) -> dict:
    out: dict[str, str] = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"bad config line (need KEY=VALUE): {line!r}")
                key, val = line.split("=", 1)
                out[key.strip().lower()] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return out


_CONFIG_KEYS = ("model", "n", "mu", "pencil", "ic", "tspan", "tol", "seed", "out", "ell", "param", "values", "jobs")


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        for key, val in cfg.items():
            if key not in _CONFIG_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            if getattr(args, key, None) is None:
                setattr(args, key, val)
    return args


def _build_system(args: argparse.Namespace) -> tuple[ReducedSystem, np.ndarray]:
    if args.mu is None:
        raise UsageError("--mu is required")
    spec = make_model(args.model or "eng", int(args.n) if args.n is not None else None)
    mu = _parse_floats(args.mu)
    pencil = (0.0, 1.0)
    if args.pencil is not None:
        pv = _parse_floats(args.pencil)
        if pv.shape != (2,):
            raise UsageError("--pencil needs two values a,b")
        pencil = (float(pv[0]), float(pv[1]))
    try:
        rsys = ReducedSystem(spec, mu, pencil)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.ic is None:
        raise UsageError("--ic is required")
    ic = _parse_floats(args.ic)
    if ic.shape != (2 * spec.n,):
        raise UsageError(f"--ic needs {2 * spec.n} values (p then x)")
    return rsys, ic


def _tspan(args) -> tuple[float, float]:
    if args.tspan is None:
        return (-10.0, 10.0)
    tv = _parse_floats(args.tspan)
    if tv.shape != (2,) or tv[1] <= tv[0]:
        raise UsageError("--tspan needs t0,t1 with t1 > t0")
    return (float(tv[0]), float(tv[1]))


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2, default=value_to_jsonable)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# -- subcommands -------------------------------------------------------------

def cmd_geodesic(args: argparse.Namespace) -> int:
    rsys, ic = _build_system(args)
    tspan = _tspan(args)
    tol = float(args.tol) if args.tol is not None else 1e-10
    traj = integrate(rsys, ic, tspan, tol=tol)
    geo = reconstruct(rsys, traj)
    mag = project_magnetic(geo)
    report = {
        "model": rsys.spec.name,
        "tspan": list(tspan),
        "class": classify_state(rsys, ic).label,
        "energy": rsys.hamiltonian(ic),
        "energy_drift": traj.energy_drift,
        "pfaffian_residual": mag.pfaffian_residual(n_samples=101),
        "wall_time_s": traj.wall_time,
    }
    if args.out:
        mag.to_csv(args.out)
        report["csv"] = args.out
    print(json.dumps(report, indent=2, default=value_to_jsonable))
    return 0


def cmd_costmap(args: argparse.Namespace) -> int:
    rsys, ic = _build_system(args)
    tspan = _tspan(args)
    tol = float(args.tol) if args.tol is not None else 1e-10
    traj = integrate(rsys, ic, tspan, tol=tol)
    geo = reconstruct(rsys, traj)
    mag = project_magnetic(geo)
    time_report = delta_cost_time(mag)
    report = {
        "time": {
            "dt": time_report.dt,
            "dy": time_report.dy,
            "dz": time_report.dz,
            "cost_t": time_report.cost_t,
            "cost_y": time_report.cost_y,
        }
    }
    # quadrature route for radial classes
    try:
        nf = normal_form(rsys.spec, rsys.mu)
    except ValueError:
        nf = None
    if nf is not None and nf.kind == "radial" and rsys.n == 2:
        ell = angular_momentum(nf, ic, 2)
        radial = RadialSystem(nf.alpha, nf.betas[0], ell, rsys.pencil)
        p0, x0 = rsys.split(ic)
        rel = x0 - nf.center
        r0 = float(np.linalg.norm(rel))
        if ell == 0.0:
            # signed axis coordinate along the motion direction
            axis = rel / r0 if r0 > 0 else np.array([1.0, 0.0])
            s0 = float(axis @ rel)
            pr0 = float(axis @ p0)
            rstate = np.array([pr0, s0])
        else:
            pr0 = float(rel @ p0) / r0
            rstate = np.array([pr0, r0])
        rtraj = integrate(radial, rstate, tspan, tol=tol)
        quad_report = delta_cost_quadrature(radial, rtraj)
        report["quadrature"] = {
            "dt": quad_report.dt,
            "dy": quad_report.dy,
            "dz": quad_report.dz,
            "cost_t": quad_report.cost_t,
            "cost_y": quad_report.cost_y,
        }
    _emit(report, args.out)
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    rsys, ic = _build_system(args)
    result = classify_state(rsys, ic)
    details = {
        k: (list(v) if isinstance(v, (tuple, np.ndarray)) else v)
        for k, v in result.details.items()
    }
    _emit({"label": result.label, "details": details}, args.out)
    return 0


def _sweep_worker(payload: dict) -> dict:
    radial = RadialSystem(
        payload["alpha"], payload["beta"], payload["ell"], tuple(payload["pencil"])
    )
    row = {"param": payload["value"]}
    try:
        pm = period_theta(radial) if radial.ell == 0.0 else None
    except ValueError:
        pm = None
    row["theta1"] = pm["theta1"] if pm else None
    row["theta2"] = pm["theta2"] if pm else None
    try:
        period = radial_period(radial)
        row["L"] = period["L"]
        row["dtheta"] = period["delta_phi"]
    except (EmptyHillError, ValueError):
        row["L"] = None
        row["dtheta"] = None
    return row


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.param is None or args.values is None:
        raise UsageError("sweep needs --param and --values")
    param = args.param.lower()
    if param not in ("alpha", "beta", "ell", "a", "b"):
        raise UsageError("--param must be one of alpha, beta, ell, a, b")
    values = _parse_floats(args.values)
    base = {
        "alpha": 1.0,
        "beta": -2.0,
        "ell": float(args.ell) if args.ell is not None else 0.0,
        "pencil": [0.0, 1.0],
    }
    if args.mu is not None:
        spec = make_model(args.model or "eng", int(args.n) if args.n is not None else None)
        nf = normal_form(spec, _parse_floats(args.mu))
        if nf.kind != "radial":
            raise UsageError("sweep needs a rotationally invariant momentum")
        base["alpha"], base["beta"] = nf.alpha, nf.betas[0]
    if args.pencil is not None:
        pv = _parse_floats(args.pencil)
        base["pencil"] = [float(pv[0]), float(pv[1])]

    payloads = []
    for v in values:
        item = dict(base)
        item["value"] = float(v)
        if param in ("a", "b"):
            pencil = list(item["pencil"])
            pencil[0 if param == "a" else 1] = float(v)
            item["pencil"] = pencil
        else:
            item[param] = float(v)
        payloads.append(item)

    jobs = int(args.jobs) if args.jobs is not None else 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, payloads))
    else:
        rows = [_sweep_worker(p) for p in payloads]

    out = args.out
    writer_target = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(writer_target)
        writer.writerow(["param", "Theta1", "Theta2", "L", "dtheta"])
        for row in rows:
            writer.writerow(
                [row["param"]]
                + [
                    "divergent" if is_divergent(row[k]) else ("" if row[k] is None else f"{row[k]:.12g}")
                    for k in ("theta1", "theta2", "L", "dtheta")
                ]
            )
    finally:
        if out:
            writer_target.close()
    return 0


def _radial_setup(rsys: ReducedSystem, ic: np.ndarray):
    nf = normal_form(rsys.spec, rsys.mu)
    if nf.kind != "radial" or rsys.n != 2:
        raise UsageError("this check needs a rotationally invariant rank-2 momentum")
    ell = angular_momentum(nf, ic, 2)
    return nf, RadialSystem(nf.alpha, nf.betas[0], ell, rsys.pencil)


def _verify_invariants(rsys, ic, tspan, tol) -> dict:
    checks: dict[str, dict] = {}
    traj = integrate(rsys, ic, tspan, tol=tol)
    checks["energy"] = {
        "drift": traj.energy_drift,
        "passed": bool(traj.energy_drift < 100.0 * tol),
    }
    mag = project_magnetic(reconstruct(rsys, traj))
    pf = mag.pfaffian_residual(n_samples=101)
    checks["pfaffian"] = {"residual": pf, "passed": bool(pf < 1e-8)}
    try:
        nf = normal_form(rsys.spec, rsys.mu)
        res = nf.residual(rsys.f_poly)
        checks["normal_form"] = {"residual": res, "passed": bool(res < 1e-12)}
    except ValueError:
        pass
    return checks


def _verify_maxwell(rsys, ic, tspan, tol) -> dict:
    _, radial = _radial_setup(rsys, ic)
    data = maxwell_check(radial)
    return {
        "maxwell": {
            **data,
            "passed": bool(data["gap_at_L"] < 1e-6 and data["gap_at_half"] > 1e-2),
        }
    }


def _verify_conjugate(rsys, ic, tspan, tol) -> dict:
    traj = integrate(rsys, ic, tspan, tol=tol)
    data = conjugate_check(rsys, traj)
    consistent = all(
        t["p_norm"] < 1e-6
        and (t["f_expected"] is None or abs(t["f_value"] - t["f_expected"]) < 1e-6)
        for t in data["touches"]
    )
    return {
        "conjugate": {
            "degenerate": data["degenerate"],
            "n_touches": len(data["touches"]),
            "conjugate_pairs": data["conjugate_pairs"],
            "passed": bool(consistent),
        }
    }


def _verify_elastica(rsys, ic, tspan, tol) -> dict:
    from .oracles import elastica_check

    nf, radial = _radial_setup(rsys, ic)
    if abs(radial.ell) > 1e-9:
        raise UsageError("elastica check needs zero angular momentum")
    _, x0 = rsys.split(ic)
    rel = x0 - nf.center
    axis = rel / np.linalg.norm(rel) if np.linalg.norm(rel) > 0 else np.array([1.0, 0.0])
    traj = integrate(rsys, ic, tspan, tol=tol)
    geo = reconstruct(rsys, traj, tol=tol)
    data = elastica_check(geo, nf.center, axis)
    return {
        "elastica": {
            "max_residual": data["max_residual"],
            "slope": data["slope"],
            "passed": bool(data["max_residual"] < 1e-6),
        }
    }


def _verify_metline(rsys, ic, tspan, tol) -> dict:
    traj = integrate(rsys, ic, tspan, tol=tol)
    geo = reconstruct(rsys, traj)
    T = min(abs(tspan[0]), abs(tspan[1]))
    if T <= 0:
        raise UsageError("metline check needs a two-sided tspan")
    data = metric_line_condition(geo, T)
    return {
        "metline": {
            "estimate": data["estimate"],
            "deficit": data["deficit"],
            "passed": bool(data["estimate"] <= 2.0 + 1e-6),
        }
    }


def _verify_sequence(rsys, ic, tspan, tol, seed: int) -> dict:
    from .oracles import sequence_experiment

    data = sequence_experiment([3, 4, 5], mu=rsys.mu, seed=seed)
    rows = data["rows"]
    solved = [r for r in rows if not r.get("failed")]
    gaps = [r["gap"] for r in solved]
    ok = (
        len(solved) == len(rows)
        and all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
        and all(r["T"] <= 2.0 * r["n"] + 1e-6 for r in solved)
    )
    return {"sequence": {"theta2": data["theta2"], "rows": rows, "passed": bool(ok)}}


def cmd_verify(args: argparse.Namespace) -> int:
    rsys, ic = _build_system(args)
    tspan = _tspan(args)
    tol = float(args.tol) if args.tol is not None else 1e-10
    which = getattr(args, "which", None)
    seed = int(args.seed) if args.seed is not None else 0

    if which is None:
        checks = _verify_invariants(rsys, ic, tspan, tol)
    elif which == "maxwell":
        checks = _verify_maxwell(rsys, ic, tspan, tol)
    elif which == "conjugate":
        checks = _verify_conjugate(rsys, ic, tspan, tol)
    elif which == "elastica":
        checks = _verify_elastica(rsys, ic, tspan, tol)
    elif which == "metline":
        checks = _verify_metline(rsys, ic, tspan, tol)
    elif which == "sequence":
        checks = _verify_sequence(rsys, ic, tspan, tol, seed)
    else:
        raise UsageError(
            "--which must be one of maxwell, conjugate, elastica, metline, sequence"
        )

    ok = all(c["passed"] for c in checks.values())
    _emit({"passed": ok, "checks": checks}, args.out)
    return 0 if ok else 1


# -- entry point -------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat KEY=VALUE config file")
    p.add_argument("--model", help="eng, n631 or g357")
    p.add_argument("--n", help="rank parameter for eng")
    p.add_argument("--mu", help="momentum coefficients a0,a1,..")
    p.add_argument("--pencil", help="pencil coefficients a,b (default 0,1)")
    p.add_argument("--ic", help="initial reduced state p..,x..")
    p.add_argument("--tspan", help="t0,t1")
    p.add_argument("--tol", help="integration tolerance (default 1e-10)")
    p.add_argument("--seed", help="random seed for stochastic oracles")
    p.add_argument("--out", help="output file (CSV or JSON depending on command)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carnotlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("geodesic", cmd_geodesic),
        ("costmap", cmd_costmap),
        ("classify", cmd_classify),
        ("sweep", cmd_sweep),
        ("verify", cmd_verify),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--param", help="swept parameter: alpha, beta, ell, a or b")
            p.add_argument("--values", help="comma-separated parameter values")
            p.add_argument("--ell", help="angular momentum for the radial rows")
            p.add_argument("--jobs", help="worker processes (default 1)")
        if name == "verify":
            p.add_argument(
                "--which",
                help="specific oracle: maxwell, conjugate, elastica, metline, sequence"
                " (default: basic invariants)",
            )
        p.set_defaults(fn=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _merge_config(args)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EmptyHillError, ValueError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
