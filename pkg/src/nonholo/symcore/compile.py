"""Code generation of fast binary64 evaluators for batches of expressions."""
from __future__ import annotations

import numpy as np

from . import symbols as sy
from .errors import SingularPointError
from .polynomial import Polynomial
from .rational import SINGULAR_THRESHOLD, RationalExpr, as_expr


def _check(d):
    if isinstance(d, float):
        if abs(d) < SINGULAR_THRESHOLD:
            raise SingularPointError("denominator vanishes at the evaluation point")
    elif np.any(np.abs(d) < SINGULAR_THRESHOLD):
        raise SingularPointError("denominator vanishes at an evaluation point")


def _poly_code(p: Polynomial, argnames: dict[str, str]) -> str:
    if p.is_zero():
        return "0.0"
    parts = []
    for m, c in p.items():
        factors = [repr(float(c))]
        for name, e in sy.unpack(m).items():
            try:
                a = argnames[name]
            except KeyError:
                raise KeyError(f"symbol {name!r} has no value at compile time") from None
            factors.append(a if e == 1 else f"{a}**{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def compile_exprs(exprs, variables, params=None, *, name="compiled"):
    """Compile expressions into ``f(*variables) -> tuple[float, ...]``.

    Parameters in ``params`` are substituted exactly before code generation;
    every remaining symbol must appear in ``variables``. Arguments may be floats
    or numpy arrays. Shared denominators are evaluated once. A denominator below 1e-300 in magnitude raises
    ``SingularPointError``.
    """
    exprs = [as_expr(e) for e in exprs]
    if params:
        exprs = [e.specialize(params) for e in exprs]
    variables = [v.name if isinstance(v, sy.Symbol) else v for v in variables]
    argnames = {v: f"a{i}" for i, v in enumerate(variables)}
    lines = [f"def {name}({', '.join(argnames.values())}):"]
    den_vars: dict[Polynomial, str] = {}
    outs = []
    for k, e in enumerate(exprs):
        if e.den.is_constant():
            c = float(e.den.constant_value())
            outs.append(f"({_poly_code(e.num, argnames)}) / {c!r}" if c != 1.0 else f"({_poly_code(e.num, argnames)})")
            continue
        dv = den_vars.get(e.den)
        if dv is None:
            dv = f"d{len(den_vars)}"
            den_vars[e.den] = dv
            lines.append(f"    {dv} = {_poly_code(e.den, argnames)}")
            lines.append(f"    _check({dv})")
        outs.append(f"({_poly_code(e.num, argnames)}) / {dv}")
    body = ",\n        ".join(outs)
    lines.append(f"    return (\n        {body},\n    )" if outs else "    return ()")
    src = "\n".join(lines)
    ns = {"_check": _check}
    exec(compile(src, f"<nonholo:{name}>", "exec"), ns)
    fn = ns[name]
    fn.__source__ = src
    return fn


def compile_expr(expr: RationalExpr, variables, params=None):
    f = compile_exprs([expr], variables, params)
    return lambda *a: f(*a)[0]
