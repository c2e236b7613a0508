"""``nonholo`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error,
3 numerical singularity (including a trajectory that stopped at one).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import identities
from .extension import build_extension
from .field import (
    CATALOG_NAMES,
    XYZ,
    FieldError,
    UndefinedPlaneError,
    VectorField3,
    catalog,
    catalog_parameters,
    euler_contraction,
    exactness_residuals,
    field_to_definition,
    holonomicity,
    load_system,
    parse_params,
)
from .geometry import build_connection, chern_simons_density, lorenz_cs_reference
from .integrators import BRANCH_LOSS, SCHEMA, SINGULAR_POINT, IntegratorConfig, Trajectory
from .ode import (
    asymptotic_directions,
    integrate_asymptotic,
    integrate_extended,
    integrate_flow,
    integrate_geodesic,
    tangent_velocity,
)
from .symcore import RationalExpr, SingularPointError, SymcoreError, compile_exprs

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_SINGULAR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class SingularBoxError(SingularPointError):
    pass


def thread_limit() -> int:
    raw = os.environ.get("NONHOLO_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"NONHOLO_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"NONHOLO_THREADS must be a positive integer, got {raw!r}")
    return n


def _vector(text: str, n: int, flag: str) -> np.ndarray:
    try:
        vals = [float(Fraction(t.strip())) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}")
    return np.array(vals)


def _box(text: str):
    v = _vector(text, 6, "--box")
    box = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
    if any(lo >= hi for lo, hi in box):
        raise UsageError("--box needs x0<x1, y0<y1, z0<z1")
    return box


# -- loading --------------------------------------------------------------------

def load_field(args) -> tuple[VectorField3, str | None]:
    params = parse_params(args.param)
    if args.system and args.catalog:
        raise UsageError("give either --system or --catalog, not both")
    if args.system:
        if not os.path.exists(args.system):
            raise UsageError(f"system file not found: {args.system}")
        return load_system(args.system, params), None
    if args.catalog:
        if args.catalog not in CATALOG_NAMES:
            raise UsageError(f"unknown catalog entry {args.catalog!r}; choose from {', '.join(CATALOG_NAMES)}")
        needed = catalog_parameters(args.catalog)
        extra = set(params) - set(needed)
        if extra:
            raise UsageError(f"{args.catalog} has no parameter(s) {sorted(extra)}")
        if not params:
            return catalog(args.catalog), args.catalog
        f = catalog(args.catalog)
        return f.specialize(params), args.catalog
    raise UsageError("a system is required: --system FILE or --catalog NAME")


def require_numeric(f: VectorField3):
    free = sorted(f.parameters())
    if free:
        raise UsageError(f"numeric command needs values for parameter(s): {', '.join(free)} (use --param)")


def integrator_config(args) -> IntegratorConfig:
    tol = args.tol
    try:
        return IntegratorConfig(
            method=args.method,
            step=args.step,
            rel_tol=tol,
            abs_tol=tol * 1e-2,
            s_end=args.s_end,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- output ---------------------------------------------------------------------

def emit_json(doc: dict, out):
    text = json.dumps({"schema": SCHEMA, **doc}, indent=2, default=_json_default) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def emit_trajectory(tr: Trajectory, out) -> int:
    if out:
        tr.to_csv(out)
    else:
        tr.to_csv(sys.stdout)
    if tr.termination == SINGULAR_POINT:
        print(f"nonholo: trajectory stopped at a singular point, s={tr.s[-1]:.6g}", file=sys.stderr)
        return EXIT_SINGULAR
    return EXIT_OK


def _expr_doc(e: RationalExpr) -> dict:
    return {"text": str(e), "is_zero": e.is_zero()}


# -- commands -------------------------------------------------------------------

def cmd_analyze(args) -> int:
    f, _ = load_field(args)
    c = build_connection(f)
    nonzero = sum(1 for i in range(3) for j in range(3) for k in range(3) if not c.pi[i][j][k].is_zero())
    report = {
        "command": "analyze",
        "field": field_to_definition(f),
        "parameters": sorted(f.parameters()),
        "holonomicity": _expr_doc(holonomicity(f)),
        "exactness_residuals": [_expr_doc(r) for r in exactness_residuals(f)],
        "euler_contraction": _expr_doc(euler_contraction(f)),
        "connection": {"delta": str(c.delta), "nonzero_components": nonzero},
        "chern_simons": {"available": True, "modes": ["partial", "covariant"]},
    }
    emit_json(report, args.out)
    return EXIT_OK


def cmd_flow(args) -> int:
    f, _ = load_field(args)
    require_numeric(f)
    tr = integrate_flow(f, _vector(args.init, 3, "--init"), integrator_config(args))
    return emit_trajectory(tr, args.out)


def _initial_velocity(f, pos, args):
    d = _vector(args.velocity, 3, "--velocity")
    v = tangent_velocity(f, pos, d)
    if not np.linalg.norm(v) > 0:
        raise UsageError("--velocity is parallel to the field; no tangent component remains")
    return v


def cmd_geodesic(args) -> int:
    f, _ = load_field(args)
    require_numeric(f)
    pos = _vector(args.init, 3, "--init")
    v = _initial_velocity(f, pos, args)
    tr = integrate_geodesic(build_connection(f), f, np.r_[pos, v], integrator_config(args))
    return emit_trajectory(tr, args.out)


def cmd_asymptotic(args) -> int:
    f, _ = load_field(args)
    require_numeric(f)
    pos = _vector(args.init, 3, "--init")
    ds = asymptotic_directions(f, pos)
    cfg = integrator_config(args)
    if ds.all_directions:
        raise UsageError("every tangent direction is asymptotic at this point; nothing to select")
    if not ds.directions:
        print(f"nonholo: no real asymptotic direction at {tuple(pos.tolist())} (discriminant {ds.discriminant:.3g})",
              file=sys.stderr)
        tr = Trajectory(np.zeros(1), np.r_[pos, np.zeros(3)][None, :],
                        ("x", "y", "z", "ux", "uy", "uz"), {}, BRANCH_LOSS)
        return emit_trajectory(tr, args.out)
    if args.branch >= len(ds.directions):
        raise UsageError(f"--branch {args.branch} requested but only {len(ds.directions)} direction(s) exist")
    tr = integrate_asymptotic(f, pos, ds.directions[args.branch], cfg)
    return emit_trajectory(tr, args.out)


def cmd_extend(args) -> int:
    f, _ = load_field(args)
    require_numeric(f)
    pos = _vector(args.init, 3, "--init")
    v = _initial_velocity(f, pos, args)
    psi = _vector(args.psi, 3, "--psi")
    dpsi = _vector(args.dpsi, 3, "--dpsi")
    m = build_extension(build_connection(f))
    tr = integrate_extended(m, np.r_[pos, psi, v, dpsi], integrator_config(args))
    return emit_trajectory(tr, args.out)


def _midpoints(box, n):
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in box]
    return np.meshgrid(*axes, indexing="ij")


def _nodes(box, n):
    axes = [np.linspace(lo, hi, n + 1) for lo, hi in box]
    return np.meshgrid(*axes, indexing="ij")


def check_box(polys, box, n: int):
    """Reject boxes where any of the labelled polynomials vanishes or changes sign on the sample lattice."""
    X = _nodes(box, 2 * n)
    for label, poly in polys:
        (vals,) = compile_exprs([RationalExpr(poly)], XYZ)(*X)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), X[0].shape)
        scale = float(np.abs(vals).max())
        if not np.isfinite(vals).all() or scale == 0.0:
            raise SingularBoxError(f"{label} is not finite or vanishes on the box")
        if vals.min() < 0 < vals.max() or float(np.abs(vals).min()) <= 1e-12 * scale:
            raise SingularBoxError(f"{label} vanishes inside the box")


def midpoint_quadrature(fn, box, n: int) -> float:
    X = _midpoints(box, n)
    (vals,) = fn(*X)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), X[0].shape)
    cell = np.prod([(hi - lo) / n for lo, hi in box])
    return float(vals.sum() * cell)


def cmd_chern_simons(args) -> int:
    f, name = load_field(args)
    require_numeric(f)
    box = _box(args.box)
    n = args.grid
    if n < 1:
        raise UsageError("--grid must be a positive integer")
    c = build_connection(f)
    dens = chern_simons_density(c, args.mode)
    polys = [("Delta", c.delta.num), ("density denominator", dens.den)]
    ref = None
    if name == "lorenz":
        ref = lorenz_cs_reference(parse_params(args.param))
        polys.append(("published closed form denominator", ref.den))
    check_box(polys, box, n)
    fn = compile_exprs([dens], XYZ)
    q1 = midpoint_quadrature(fn, box, n)
    q2 = midpoint_quadrature(fn, box, 2 * n)
    report = {
        "command": "chern-simons",
        "mode": args.mode,
        "density": str(dens),
        "box": [list(b) for b in box],
        "quadrature": {
            "grid": n,
            "value": q1,
            "refined_grid": 2 * n,
            "refined_value": q2,
            "relative_change": abs(q2 - q1) / abs(q2) if q2 else abs(q2 - q1),
            "richardson": q2 + (q2 - q1) / 3.0,
        },
    }
    if ref is not None:
        X = _midpoints(box, n)
        (r,) = compile_exprs([ref], XYZ)(*X)
        comparison = {}
        for mode in ("partial", "covariant"):
            d = dens if mode == args.mode else chern_simons_density(c, mode)
            (v,) = compile_exprs([d], XYZ)(*X)
            rel = np.abs(v - r) / np.abs(r)
            comparison[mode] = {"max_rel_deviation": float(rel.max()),
                                "reference_over_density_mean": float(np.mean(r / v))}
        comparison["matching_modes"] = [m for m in ("partial", "covariant")
                                        if comparison[m]["max_rel_deviation"] < 1e-8]
        report["lorenz_reference"] = comparison
    emit_json(report, args.out)
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.catalog:
        f, _ = load_field(args)
        emit_json({"command": "catalog", "name": args.catalog,
                   "parameters": list(catalog_parameters(args.catalog)),
                   "definition": field_to_definition(f)}, args.out)
        return EXIT_OK
    entries = [{"name": n, "parameters": list(catalog_parameters(n))} for n in CATALOG_NAMES]
    emit_json({"command": "catalog", "entries": entries}, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = args.check or list(identities.CHECKS)
    unknown = [n for n in names if n not in identities.CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s) {unknown}; available: {', '.join(identities.CHECKS)}")
    results = identities.run_checks(names, max_workers=min(thread_limit(), len(names)))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}", file=sys.stderr)
    report = {
        "command": "verify",
        "checks": [r.as_dict() for r in results],
        "passed": all(r.passed for r in results),
        "failures": [r.name for r in results if not r.passed],
    }
    if not args.check:
        cs = identities.cs_mode_comparison()
        report["chern_simons_lorenz"] = cs
        print(f"INFO  chern_simons_lorenz: matching modes {cs['matching_modes'] or 'none'}", file=sys.stderr)
    emit_json(report, args.out)
    if report["failures"]:
        print("nonholo: verification failed: " + ", ".join(report["failures"]), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonholo", description="Geometry of Pfaff equations P dx + Q dy + R dz = 0.")
    sub = p.add_subparsers(dest="command", required=True)

    def system_flags(sp):
        sp.add_argument("--system", help="JSON system definition file")
        sp.add_argument("--catalog", help="built-in system name")
        sp.add_argument("--param", action="append", default=[], metavar="K=V",
                        help="parameter value, exact rationals such as 8/3 (repeatable)")
        sp.add_argument("--out", help="output file (default: stdout)")

    def integ_flags(sp, s_end=10.0):
        sp.add_argument("--method", choices=("rk4", "rkf45"), default="rkf45")
        sp.add_argument("--step", type=float, default=1e-2, help="fixed step (rk4) or initial step (rkf45)")
        sp.add_argument("--tol", type=float, default=1e-10, help="relative tolerance (absolute is tol/100)")
        sp.add_argument("--s-end", type=float, default=s_end, dest="s_end")
        sp.add_argument("--init", default="1,1,1", help="initial point x,y,z")

    sp = sub.add_parser("analyze", help="holonomicity, exactness and connection summary")
    system_flags(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("flow", help="integrate x' = (P, Q, R)")
    system_flags(sp)
    integ_flags(sp)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("geodesic", help="integrate a first-kind geodesic")
    system_flags(sp)
    integ_flags(sp)
    sp.add_argument("--velocity", default="1,0,0", help="initial direction, projected onto the admissible plane")
    sp.set_defaults(func=cmd_geodesic)

    sp = sub.add_parser("asymptotic", help="continue an asymptotic line")
    system_flags(sp)
    integ_flags(sp, s_end=1.0)
    sp.add_argument("--branch", type=int, default=0, help="which asymptotic direction to follow")
    sp.set_defaults(func=cmd_asymptotic)

    sp = sub.add_parser("extend", help="integrate a geodesic of the 6D Riemann extension")
    system_flags(sp)
    integ_flags(sp, s_end=5.0)
    sp.add_argument("--velocity", default="1,0,0")
    sp.add_argument("--psi", default="0,0,0", help="initial fiber coordinates")
    sp.add_argument("--dpsi", default="1,0,0", help="initial fiber velocity")
    sp.set_defaults(func=cmd_extend)

    sp = sub.add_parser("chern-simons", help="Chern-Simons density and box quadrature")
    system_flags(sp)
    sp.add_argument("--box", default="1,2,1,2,1,2", help="x0,x1,y0,y1,z0,z1")
    sp.add_argument("--grid", type=int, default=10, help="cells per axis (refinement uses twice this)")
    sp.add_argument("--mode", choices=("partial", "covariant"), default="partial")
    sp.set_defaults(func=cmd_chern_simons)

    sp = sub.add_parser("catalog", help="list built-in systems or show one")
    system_flags(sp)
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("verify", help="run the built-in identity checks")
    sp.add_argument("--check", action="append", help="run only this check (repeatable)")
    sp.add_argument("--out", help="JSON report file (default: stdout)")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SingularPointError, UndefinedPlaneError) as exc:
        print(f"nonholo: singular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (UsageError, FieldError, SymcoreError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"nonholo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
