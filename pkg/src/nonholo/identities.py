"""Closed-form identities of the Pfaff-equation geometry, as named checks.

Each check returns a ``CheckResult``. ``run_checks`` is what ``nonholo verify``
executes; the published constants it compares against live in
``PUBLISHED`` so a single mutated constant produces a single named failure.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .extension import build_extension, integrate_transport
from .field import (
    XYZ,
    catalog,
    euler_contraction,
    holonomicity,
    planar_system,
    projective_extension,
)
from .geometry import (
    asymptotic_form,
    bianchi_residuals,
    build_connection,
    chern_simons_density,
    curvature_tensor,
    lorenz_cs_reference,
)
from .integrators import IntegratorConfig
from .ode import (
    base_projection_deviation,
    integrate_extended,
    integrate_geodesic,
    power_law_exponent,
    power_law_quadratic,
    power_law_residual,
    tangent_velocity,
)
from .symcore import RationalExpr, compile_exprs, parse_expr, reduce_radical, symbol_table, var

LORENZ_PARAMS = {"sigma": Fraction(10), "r": Fraction(28), "b": Fraction(8, 3)}

PUBLISHED = {
    "lorenz_holonomicity": "sigma*x*y - 2*sigma*x^2 + y^2 - b*z*r + b*z^2 + b*z*sigma",
    "rossler_holonomicity": "-x + x*z - a*y - a*y*z + 2*b - 2*c*z",
    "lorenz_asymptotic_form": "-dy^2 + (r + sigma - z)*dx*dy - sigma*dx^2 + y*dx*dz - b*dz^2",
    "lorenz_singular_conic": "z^2*b + (-2*sigma*b - 2*r*b)*z + y^2 + 2*b*r*sigma + b*r^2 - 4*sigma*b + b*sigma^2",
    "vdp_condition_1": "x^2 + y^2 - x*mu^2*y",
    "vdp_condition_2": "-x^2 + 2*y^2 + 4*x*mu^2*y",
    # slope = centre + sign * sqrt(radicand) / 2
    "vdp_slopes_1": ("mu^2/2", "mu^4 - 4"),
    "vdp_slopes_2": ("-mu^2", "4*mu^4 + 2"),
}

# coefficients of the first-order equation L y'^2 + M y' + N = 0 for y(z)
LORENZ_ASYMPTOTIC_L_OVER = (
    "-z^4*b^2 + (2*sigma*b^2 + b*y^2 + 2*r*b^2)*z^3"
    " + ((-2*r*b - 2*sigma*b)*y^2 + 4*sigma*b^2 - r^2*b^2 - sigma^2*b^2 - 2*sigma*b^2*r)*z^2"
    " + (y^4 + (sigma^2*b + 2*sigma*r*b + r^2*b - 4*sigma*b)*y^2)*z + (1 - r)*y^4"
)
LORENZ_ASYMPTOTIC_M_OVER = (
    "-2*z^3*b^2 + (3*sigma*b^2 + 3*r*b^2 + b*y^2)*z^2"
    " + ((-2*sigma*b - r*b - 2*b)*y^2 - 2*sigma*b^2*r - sigma^2*b^2 + 4*sigma*b^2 - r^2*b^2)*z"
    " + y^4 + (-3*sigma*b + sigma*r*b + r*b + sigma^2*b)*y^2"
)
LORENZ_ASYMPTOTIC_N = (
    "b^3*z^4 + (-3*y^2*b^2 - 2*r*b^3 + 2*sigma*b^3)*z^3"
    " + (b*y^4 + (5*r*b^2 + 4*sigma*b^2)*y^2 + sigma^2*b^3 + r^2*b^3 - 2*sigma*b^3*r)*z^2"
    " + ((-r*b - 2*sigma*b - 3*b)*y^4 + (-8*sigma*b^2*r - 2*r^2*b^2 + 12*sigma*b^2 - 2*sigma^2*b^2)*y^2)*z"
    " + y^6 + (2*r*b + sigma^2*b + 2*sigma*r*b - b - 4*sigma*b)*y^4"
    " + (4*sigma*b^2 + 4*sigma*r^2*b^2 - 8*sigma*b^2*r)*y^2"
)

_LORENZ_T = symbol_table("sigma", "r", "b", coordinates=XYZ)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    data: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3), **({"data": self.data} if self.data else {})}


def _expr(key: str, *params: str) -> RationalExpr:
    return parse_expr(PUBLISHED[key], symbol_table(*params, "dx", "dy", "dz", coordinates=XYZ))


def _residual_check(name, computed: RationalExpr, published: RationalExpr) -> CheckResult:
    diff = computed - published
    ok = diff.is_zero()
    return CheckResult(name, ok, "exact" if ok else f"residual: {diff}")


# -- symbolic checks -----------------------------------------------------------

def check_lorenz_holonomicity():
    return _residual_check("lorenz_holonomicity", holonomicity(catalog("lorenz")),
                           _expr("lorenz_holonomicity", "sigma", "r", "b"))


def check_rossler_holonomicity():
    return _residual_check("rossler_holonomicity", holonomicity(catalog("rossler")),
                           _expr("rossler_holonomicity", "a", "b", "c"))


def check_lorenz_asymptotic_form():
    q = asymptotic_form(catalog("lorenz")).quadratic_expr()
    return _residual_check("lorenz_asymptotic_form", q, _expr("lorenz_asymptotic_form", "sigma", "r", "b"))


def random_quadratic10_params(rng: np.random.Generator) -> dict:
    names = ("k", "l", "m", "n", "a", "b", "c", "e", "f", "h")
    return {k: Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) for k in names}


def check_projective_holonomicity(n_random: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    failures = []
    systems = [("quadratic10(symbolic)", catalog("quadratic10"))]
    for i in range(n_random):
        systems.append((f"quadratic10#{i}", catalog("quadratic10", random_quadratic10_params(rng))))
    for name in ("vdp_projective", "quartic_center", "cubic_node"):
        systems.append((name, catalog(name)))
    for label, f in systems:
        if not holonomicity(f).is_zero() or not euler_contraction(f).is_zero():
            failures.append(label)
    ok = not failures
    return CheckResult("projective_holonomicity", ok,
                       f"{len(systems)} systems holonomic" if ok else f"nonzero for {failures}")


def check_triple_product_holonomic():
    h = holonomicity(catalog("triple_product"))
    return CheckResult("triple_product_holonomic", h.is_zero(), "exact" if h.is_zero() else str(h))


def check_power_law():
    res = power_law_residual(sign=-1)
    A2, A1, A0 = power_law_quadratic(2, -1, 1)
    K = power_law_exponent(2, -1, 1)
    a2, a1, a0 = (float(v.constant_value()) for v in (A2, A1, A0))
    roots = sorted(np.roots([a2, a1, a0]).real)
    ok = res.is_zero() and abs(K + 1 / 3) < 1e-15 and np.allclose(roots, [-1 / 3, 1.0], atol=1e-14)
    return CheckResult("power_law_quadratic", ok,
                       f"closed-form K residual {res}; K(2,-1,1) = {K!r}; roots {roots}")


def check_bianchi():
    bad = []
    for name, params in (("lorenz", None), ("triple_product", None)):
        r = curvature_tensor(build_connection(catalog(name, params)))
        for idx, v in bianchi_residuals(r).items():
            if not v.is_zero():
                bad.append((name, idx))
        for (l, k, j, i), v in r.components():
            if not (v + r[l][k][i][j]).is_zero():
                bad.append((name, "antisymmetry", (l, k, j, i)))
    return CheckResult("bianchi", not bad, "exact" if not bad else f"nonzero residuals {bad[:4]}")


def check_extended_determinant():
    bad = []
    for name in ("lorenz", "rossler", "triple_product"):
        m = build_extension(build_connection(catalog(name)))
        if not (m.determinant() == RationalExpr(-1)):
            bad.append(name)
        if not all(e.is_zero() for e in m.block_residuals()):
            bad.append(name + ":blocks")
    return CheckResult("extended_determinant", not bad, "det(g) = -1" if not bad else f"failed for {bad}")


def vdp_slope_residuals():
    """Residuals of the published slope families in the quadratics implied by the conditions."""
    t = symbol_table("mu", "k", "w", coordinates=XYZ)
    k, x = var("k"), var("x")
    out = {}
    for idx in (1, 2):
        cond = parse_expr(PUBLISHED[f"vdp_condition_{idx}"], t)
        on_line = cond.substitute("y", k * x)
        quad = on_line / (x * x)
        centre, radicand = (parse_expr(s, t) for s in PUBLISHED[f"vdp_slopes_{idx}"])
        for sign in (1, -1):
            slope = centre + var("w") * Fraction(sign, 2)
            res = reduce_radical(quad.substitute("k", slope), "w", radicand)
            out[(idx, sign)] = res
        out[(idx, "polynomial")] = quad
    return out


def check_vdp_slopes():
    res = vdp_slope_residuals()
    bad = [key for key, v in res.items() if key[1] != "polynomial" and not v.is_zero()]
    mu = var("mu")
    k = var("k")
    exp1 = k * k - mu * mu * k + 1
    exp2 = k * k * 2 + mu * mu * k * 4 - 1
    if not (res[(1, "polynomial")] == exp1 and res[(2, "polynomial")] == exp2):
        bad.append("quadratics")
    return CheckResult("vdp_slopes", not bad, "both slope families exact" if not bad else f"failed {bad}")


def lorenz_conic_residual() -> RationalExpr:
    """``M^2 - 4 L N`` restricted to the published singular conic (as a y^2(z) relation)."""
    t = _LORENZ_T
    one_r_z = 1 - var("r") + var("z")
    L = one_r_z * parse_expr(LORENZ_ASYMPTOTIC_L_OVER, t)
    M = var("y") * one_r_z * parse_expr(LORENZ_ASYMPTOTIC_M_OVER, t) * -2
    N = parse_expr(LORENZ_ASYMPTOTIC_N, t)
    disc = M * M - L * N * 4
    conic = parse_expr(PUBLISHED["lorenz_singular_conic"], t)
    y2 = var("y") * var("y") - conic
    return reduce_radical(disc, "y", y2)


def check_lorenz_conic():
    res = lorenz_conic_residual()
    return CheckResult("lorenz_conic_discriminant", res.is_zero(),
                       "discriminant vanishes on the conic" if res.is_zero() else f"residual: {res}")


def check_cs_flat_zero():
    c = build_connection(parse_field("1", "2", "3"))
    ok = all(chern_simons_density(c, m).is_zero() for m in ("partial", "covariant"))
    return CheckResult("cs_flat_zero", ok, "both modes vanish" if ok else "nonzero density for a constant field")


def parse_field(P, Q, R, *params):
    from .field import VectorField3

    t = symbol_table(*params, coordinates=XYZ)
    return VectorField3(parse_expr(P, t), parse_expr(Q, t), parse_expr(R, t))


# -- numeric checks ------------------------------------------------------------

def check_contraction_conservation(n_inits: int = 20, seed: int = 1, s_end: float = 10.0):
    f = catalog("lorenz", LORENZ_PARAMS)
    c = build_connection(f)
    rng = np.random.default_rng(seed)
    cfg = IntegratorConfig(method="rkf45", rel_tol=1e-10, abs_tol=1e-12, s_end=s_end)
    worst = 0.0
    terms = set()
    for _ in range(n_inits):
        v = tangent_velocity(f, (1.0, 1.0, 1.0), rng.normal(size=3))
        tr = integrate_geodesic(c, f, np.r_[1.0, 1.0, 1.0, v], cfg)
        terms.add(tr.termination)
        worst = max(worst, float(np.abs(tr.monitors["pfaff_contraction"]).max()))
    ok = worst < 1e-8 and terms == {"completed"}
    return CheckResult("contraction_conservation", ok, f"max |P x' + Q y' + R z'| = {worst:.3e}",
                       {"max_abs": worst})


def extended_cross_checks(seed: int = 2, s_end: float = 5.0, params=None):
    """Base projection and fiber transport comparisons along one Lorenz 6D geodesic."""
    params = params or LORENZ_PARAMS
    f = catalog("lorenz", params)
    c = build_connection(f)
    m = build_extension(c)
    r = curvature_tensor(c)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3)
    psi, dpsi = rng.normal(size=3), rng.normal(size=3)
    cfg = IntegratorConfig(method="rkf45", rel_tol=1e-10, abs_tol=1e-12, s_end=s_end)
    init = np.r_[1.0, 1.0, 1.0, psi, v, dpsi]
    t6 = integrate_extended(m, init, cfg)
    base_dev, _ = base_projection_deviation(t6, m, cfg)
    grid = t6.s[1:]
    base_init = np.r_[init[:3], v]
    t_cov = integrate_transport(c, r, base_init, psi, dpsi, cfg, route="covariant", s_eval=grid)
    t_jac = integrate_transport(c, r, base_init, psi, dpsi, cfg, route="jacobi", s_eval=grid)
    n = min(len(t6), len(t_cov), len(t_jac))
    fib6 = t6.states[:n, 3:6]
    out = {
        "base_deviation": base_dev,
        "psi_6d_vs_covariant": float(np.abs(fib6 - t_cov.states[:n, 6:9]).max()),
        "psi_6d_vs_jacobi": float(np.abs(fib6 - t_jac.states[:n, 6:9]).max()),
        "psi_covariant_vs_jacobi": float(np.abs(t_cov.states[:n, 6:9] - t_jac.states[:n, 6:9]).max()),
        "metric_norm_drift": float(np.ptp(t6.monitors["metric_norm"])),
        "terminations": sorted({t6.termination, t_cov.termination, t_jac.termination}),
        "samples": n,
        "s_end": float(t6.s[n - 1]),
    }
    return out


_CROSS: dict = {}


def _cross_checks() -> dict:
    if "lorenz" not in _CROSS:
        _CROSS["lorenz"] = extended_cross_checks()
    return _CROSS["lorenz"]


def check_decomposition():
    d = _cross_checks()
    ok = d["base_deviation"] < 1e-6 and d["terminations"] == ["completed"]
    return CheckResult("decomposition", ok, f"base projection deviation {d['base_deviation']:.3e}",
                       {"base_deviation": d["base_deviation"]})


def check_psi_equivalence():
    d = _cross_checks()
    worst = max(d["psi_6d_vs_covariant"], d["psi_6d_vs_jacobi"], d["psi_covariant_vs_jacobi"])
    ok = worst < 1e-6 and d["metric_norm_drift"] < 1e-8
    return CheckResult("psi_equivalence", ok,
                       f"max pairwise psi deviation {worst:.3e}; g(v,v) drift {d['metric_norm_drift']:.3e}",
                       {k: d[k] for k in ("psi_6d_vs_covariant", "psi_6d_vs_jacobi", "psi_covariant_vs_jacobi",
                                          "metric_norm_drift")})


# -- Chern-Simons comparison (informational in verify) --------------------------

def cs_mode_comparison(n_points: int = 100, seed: int = 3, box=((1, 2), (1, 2), (1, 2)), params=None):
    """Max relative deviation of each density mode from the published Lorenz closed form."""
    params = params or LORENZ_PARAMS
    c = build_connection(catalog("lorenz", params))
    ref = lorenz_cs_reference(params)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(lo, hi, n_points) for lo, hi in box])
    fref = compile_exprs([ref], XYZ)
    r = np.array(fref(pts[:, 0], pts[:, 1], pts[:, 2])[0])
    out = {}
    for mode in ("partial", "covariant"):
        dens = chern_simons_density(c, mode)
        fd = compile_exprs([dens], XYZ)
        v = np.array(fd(pts[:, 0], pts[:, 1], pts[:, 2])[0])
        rel = np.abs(v - r) / np.abs(r)
        ratio = r / v
        out[mode] = {
            "max_rel_error": float(rel.max()),
            "reference_over_density": [float(ratio.min()), float(ratio.max())],
        }
    matching = [m for m in ("partial", "covariant") if out[m]["max_rel_error"] < 1e-8]
    out["matching_modes"] = matching
    return out


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "lorenz_holonomicity": check_lorenz_holonomicity,
    "rossler_holonomicity": check_rossler_holonomicity,
    "lorenz_asymptotic_form": check_lorenz_asymptotic_form,
    "projective_holonomicity": check_projective_holonomicity,
    "triple_product_holonomic": check_triple_product_holonomic,
    "power_law_quadratic": check_power_law,
    "contraction_conservation": check_contraction_conservation,
    "extended_determinant": check_extended_determinant,
    "decomposition": check_decomposition,
    "psi_equivalence": check_psi_equivalence,
    "bianchi": check_bianchi,
    "vdp_slopes": check_vdp_slopes,
    "lorenz_conic_discriminant": check_lorenz_conic,
    "cs_flat_zero": check_cs_flat_zero,
}


def run_check(name: str) -> CheckResult:
    t0 = time.perf_counter()
    try:
        res = CHECKS[name]()
    except Exception as exc:  # a crashing check is a failed check, reported by name
        res = CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def run_checks(names=None, max_workers: int = 1) -> list[CheckResult]:
    names = list(names or CHECKS)
    if max_workers <= 1:
        return [run_check(n) for n in names]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_check, names))
