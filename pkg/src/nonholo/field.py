"""Vector fields and Pfaff forms in three dimensions.

One triple ``(P, Q, R)`` plays two roles: the flow field ``dx/ds = P`` etc., and
the 1-form ``P dx + Q dy + R dz``. The curl sign convention used throughout is
``(R_y - Q_z, P_z - R_x, Q_x - P_y)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .symcore import (
    ONE_EXPR,
    Polynomial,
    RationalExpr,
    SingularPointError,
    ZERO_EXPR,
    as_expr,
    compile_exprs,
    parse_expr,
    symbol_table,
    var,
)

XYZ = ("x", "y", "z")


class FieldError(ValueError):
    pass


class UndefinedPlaneError(FieldError):
    pass


@dataclass(frozen=True, eq=False)
class VectorField3:
    P: RationalExpr
    Q: RationalExpr
    R: RationalExpr

    def __post_init__(self):
        for name in ("P", "Q", "R"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        if self.P.is_zero() and self.Q.is_zero() and self.R.is_zero():
            raise FieldError("vector field is identically zero")

    @property
    def components(self) -> tuple[RationalExpr, RationalExpr, RationalExpr]:
        return (self.P, self.Q, self.R)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def parameters(self) -> set[str]:
        names = set()
        for c in self.components:
            names |= c.symbols()
        return names - set(XYZ)

    def specialize(self, params) -> "VectorField3":
        if not params:
            return self
        return VectorField3(*(c.specialize(params) for c in self.components))

    def jacobian(self) -> list[list[RationalExpr]]:
        """``J[i][j] = d N_i / d x_j``."""
        return [[c.diff(v) for v in XYZ] for c in self.components]

    def delta(self) -> RationalExpr:
        return self.P * self.P + self.Q * self.Q + self.R * self.R

    def __eq__(self, other):
        if not isinstance(other, VectorField3):
            return NotImplemented
        return all(a == b for a, b in zip(self.components, other.components))

    __hash__ = None

    def __str__(self):
        return f"[{self.P}, {self.Q}, {self.R}]"


@dataclass(frozen=True, eq=False)
class PlanarPolySystem:
    """``dx/ds = p(x, y)``, ``dy/ds = q(x, y)`` with polynomial right-hand sides."""

    p: Polynomial
    q: Polynomial

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if isinstance(v, RationalExpr):
                if not v.is_polynomial():
                    raise FieldError(f"{name} must be a polynomial")
                v = v.num
            elif isinstance(v, (int, Fraction)):
                v = Polynomial.constant(v)
            object.__setattr__(self, name, v)
            bad = v.symbols() & {"z", "psi1", "psi2", "psi3"}
            if bad:
                raise FieldError(f"{name} depends on {sorted(bad)}; planar systems use x, y only")

    @property
    def degree(self) -> int:
        return max(_xy_degree(self.p), _xy_degree(self.q))


@dataclass(frozen=True)
class PlaneEquation:
    """``P0 (X - x0) + Q0 (Y - y0) + R0 (Z - z0) = 0``."""

    normal: tuple[float, float, float]
    point: tuple[float, float, float]

    def __post_init__(self):
        if not any(self.normal):
            raise UndefinedPlaneError("plane normal is zero")

    def residual(self, X) -> float:
        return float(np.dot(self.normal, np.subtract(X, self.point)))


def _xy_degree(p: Polynomial) -> int:
    from .symcore import symbols as sy

    ix, iy = sy.slot("x"), sy.slot("y")
    if p.is_zero():
        return -1
    return max(sy.exponent(m, ix) + sy.exponent(m, iy) for m, _ in p.items())


# -- differential operators -------------------------------------------------

def curl(f: VectorField3) -> tuple[RationalExpr, RationalExpr, RationalExpr]:
    P, Q, R = f.components
    return (R.diff("y") - Q.diff("z"), P.diff("z") - R.diff("x"), Q.diff("x") - P.diff("y"))


def holonomicity(f: VectorField3) -> RationalExpr:
    """Scalar ``(N, rot N)``; identically zero iff the Pfaff equation is integrable."""
    c = curl(f)
    return f.P * c[0] + f.Q * c[1] + f.R * c[2]


def exactness_residuals(f: VectorField3):
    P, Q, R = f.components
    return (P.diff("y") - Q.diff("x"), Q.diff("z") - R.diff("y"), R.diff("x") - P.diff("z"))


def is_closed(f: VectorField3) -> bool:
    return all(r.is_zero() for r in exactness_residuals(f))


def gradient(phi) -> VectorField3:
    phi = as_expr(phi)
    return VectorField3(*(phi.diff(v) for v in XYZ))


def euler_contraction(f: VectorField3) -> RationalExpr:
    return var("x") * f.P + var("y") * f.Q + var("z") * f.R


def tangent_plane(f: VectorField3, point, params=None) -> PlaneEquation:
    fn = compile_exprs(f.components, XYZ, params)
    try:
        n = tuple(float(v) for v in fn(*point))
    except SingularPointError:
        raise
    if not any(n):
        raise UndefinedPlaneError(f"field vanishes at {tuple(point)}; tangent plane undefined")
    return PlaneEquation(n, tuple(float(v) for v in point))


def homogenize(p: Polynomial, degree: int) -> Polynomial:
    from .symcore import symbols as sy

    ix, iy, iz = sy.slot("x"), sy.slot("y"), sy.slot("z")
    out = {}
    for m, c in p.items():
        d = sy.exponent(m, ix) + sy.exponent(m, iy)
        out[m + (degree - d) * sy.unit(iz)] = c
    return Polynomial(out)


def projective_extension(s: PlanarPolySystem) -> VectorField3:
    """Pfaff form ``-z Q~ dx + z P~ dy + (x Q~ - y P~) dz`` of the homogenized system."""
    d = s.degree
    if d < 1:
        raise FieldError("planar system must have positive degree")
    Pt = RationalExpr(homogenize(s.p, d))
    Qt = RationalExpr(homogenize(s.q, d))
    x, y, z = var("x"), var("y"), var("z")
    return VectorField3(-z * Qt, z * Pt, x * Qt - y * Pt)


# -- catalog ----------------------------------------------------------------

_PLANAR = {
    "quadratic10": (
        ("k", "l", "m", "n", "a", "b", "c", "e", "f", "h"),
        "k*x + l*y + a*x^2 + b*x*y + c*y^2",
        "m*x + n*y + e*x^2 + f*x*y + h*y^2",
    ),
    "vdp_projective": (("mu",), "y", "-x - x^2*y + mu^2*y"),
    "cubic_node": (("a", "b"), "-y + a*x*(x^2 + y^2 - 1)", "x + b*y*(x^2 + y^2 - 1)"),
    "quartic_center": (("A", "a"), "-A*y + y*x^2 - x^4", "a*x - x^3"),
}

_SPATIAL = {
    "lorenz": (("sigma", "r", "b"), "sigma*(y - x)", "r*x - y - z*x", "x*y - b*z"),
    "rossler": (("a", "b", "c"), "-y - z", "x + a*y", "b + x*z - c*z"),
    "triple_product": (("a", "b", "c"), "a*y*z", "b*x*z", "c*x*y"),
}

CATALOG_NAMES = tuple(_SPATIAL) + tuple(_PLANAR)


def catalog_parameters(name: str) -> tuple[str, ...]:
    if name in _SPATIAL:
        return _SPATIAL[name][0]
    if name in _PLANAR:
        return _PLANAR[name][0]
    raise FieldError(f"unknown catalog system {name!r}; known: {', '.join(CATALOG_NAMES)}")


def planar_system(name: str, params=None) -> PlanarPolySystem:
    if name not in _PLANAR:
        raise FieldError(f"{name!r} is not a planar catalog system")
    names, p, q = _PLANAR[name]
    values = _check_params(name, names, params)
    table = symbol_table(*names)
    ps = parse_expr(p, table).specialize(values)
    qs = parse_expr(q, table).specialize(values)
    return PlanarPolySystem(ps, qs)


def catalog(name: str, params=None) -> VectorField3:
    """Named field from the catalog.

    With ``params=None`` all parameters stay symbolic. Otherwise every
    parameter must be given, as a rational number or an expression string.
    """
    names = catalog_parameters(name)
    if name in _PLANAR:
        return projective_extension(planar_system(name, params))
    values = _check_params(name, names, params)
    table = symbol_table(*names)
    comps = [parse_expr(t, table).specialize(values) for t in _SPATIAL[name][1:]]
    return VectorField3(*comps)


def _check_params(name, names, params):
    if params is None:
        return {}
    missing = [n for n in names if n not in params]
    if missing:
        raise FieldError(f"catalog system {name!r} is missing parameter(s): {', '.join(missing)}")
    unknown = set(params) - set(names)
    if unknown:
        raise FieldError(f"catalog system {name!r} has no parameter(s): {', '.join(sorted(unknown))}")
    out = {}
    for k in names:
        v = params[k]
        if isinstance(v, str):
            try:
                v = Fraction(v)
            except ValueError:
                # symbolic value such as "sigma"
                out[k] = None
                continue
        out[k] = to_fraction(v)
    return {k: v for k, v in out.items() if v is not None}


def to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**12) if v != int(v) else Fraction(int(v))
    return Fraction(str(v))


def parse_params(items) -> dict[str, Fraction]:
    """Parse ``["sigma=10", "b=8/3"]`` into exact rationals."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise FieldError(f"parameter {item!r} is not of the form name=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = Fraction(v.strip())
        except ValueError:
            raise FieldError(f"parameter value {v!r} is not an exact rational") from None
    return out


# -- system-definition files -------------------------------------------------

def field_from_definition(spec: dict, params=None) -> VectorField3:
    """Build a field from a decoded system-definition document.

    Either ``{"catalog": name, "params": {...}}`` or ``{"P": str, "Q": str, "R": str}``
    with optional ``"parameters"`` (declared names) and ``"params"`` (values).
    """
    merged = dict(spec.get("params") or {})
    merged.update(params or {})
    if "catalog" in spec:
        name = spec["catalog"]
        names = catalog_parameters(name)
        if not merged:
            return catalog(name)
        if set(names) - set(merged):
            f = catalog(name)
            return f.specialize({k: to_fraction(v) for k, v in merged.items()})
        return catalog(name, merged)
    try:
        texts = [spec["P"], spec["Q"], spec["R"]]
    except KeyError as exc:
        raise FieldError(f"system definition lacks component {exc.args[0]!r}") from None
    declared = set(spec.get("parameters") or ()) | set(merged)
    table = symbol_table(*declared, coordinates=XYZ)
    f = VectorField3(*(parse_expr(t, table) for t in texts))
    return f.specialize({k: to_fraction(v) for k, v in merged.items()})


def load_system(path, params=None) -> VectorField3:
    with open(Path(path), encoding="utf-8") as fh:
        spec = json.load(fh)
    return field_from_definition(spec, params)


def field_to_definition(f: VectorField3, parameters=None) -> dict:
    return {
        "P": str(f.P),
        "Q": str(f.Q),
        "R": str(f.R),
        "parameters": sorted(parameters if parameters is not None else f.parameters()),
    }


class NumericField:
    """Compiled binary64 evaluators of a field, its Jacobian and a magnitude scale."""

    def __init__(self, f: VectorField3, params=None):
        self.params = dict(params or {})
        comps = list(f.components)
        jac = [e for row in f.jacobian() for e in row]
        self._fj = compile_exprs(comps + jac, XYZ, self.params, name="field_and_jacobian")
        scale = [RationalExpr(e.specialize(self.params).num.abs_coefficients()) for e in comps]
        self._scale = compile_exprs(scale, XYZ, name="field_scale")

    def __call__(self, pos) -> np.ndarray:
        return np.array(self._fj(*pos)[:3])

    def with_jacobian(self, pos):
        v = self._fj(*pos)
        return np.array(v[:3]), np.array(v[3:]).reshape(3, 3)

    def scale2(self, pos) -> float:
        """Squared magnitude of the field with all coefficients made positive."""
        a = np.array(self._scale(*np.abs(np.asarray(pos, dtype=float))))
        return float(a @ a)

    def is_singular(self, pos, rel=1e-12) -> bool:
        try:
            n = self(pos)
        except (SingularPointError, ZeroDivisionError, OverflowError):
            return True
        d = float(n @ n)
        if not np.isfinite(d):
            return True
        return d <= rel * self.scale2(pos)


def numeric_field(f: VectorField3, params=None) -> NumericField:
    cache = f.__dict__.setdefault("_numeric_cache", {})
    key = tuple(sorted((k, str(v)) for k, v in (params or {}).items()))
    nf = cache.get(key)
    if nf is None:
        nf = cache[key] = NumericField(f, params)
    return nf
