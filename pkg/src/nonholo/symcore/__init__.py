"""Exact computer-algebra core: polynomials and rational expressions over Q."""
from .compile import compile_expr, compile_exprs
from .errors import (
    ExponentOverflowError,
    NotACoordinateError,
    ParseError,
    SingularPointError,
    SymcoreError,
    UndeclaredSymbolError,
    ZeroDenominatorError,
)
from .parser import parse_expr, symbol_table
from .polynomial import Polynomial
from .rational import ONE_EXPR, ZERO_EXPR, RationalExpr, as_expr
from .symbols import COORDINATES, Symbol, symbol


def differentiate(e, v) -> RationalExpr:
    return as_expr(e).diff(v)


def evaluate(e, assignment) -> float:
    return as_expr(e).evaluate(assignment)


def is_zero(e) -> bool:
    return as_expr(e).is_zero()


def substitute(e, v, r) -> RationalExpr:
    return as_expr(e).substitute(v, r)


def var(name: str) -> RationalExpr:
    return RationalExpr.symbol(name)


def const(c) -> RationalExpr:
    from fractions import Fraction

    return RationalExpr(Polynomial.constant(Fraction(c)))


def reduce_radical(e, name: str, radicand) -> RationalExpr:
    """Rewrite ``e`` using ``name**2 == radicand`` until ``name`` appears at most linearly.

    Only the numerator is reduced; this is the residual test for
    expressions involving a single square root.
    """
    e = as_expr(e)
    radicand = as_expr(radicand)
    groups = e.num.collect(name)
    out = ZERO_EXPR
    w = var(name)
    for k, coeff in groups.items():
        out = out + RationalExpr(coeff) * radicand ** (k // 2) * w ** (k % 2)
    return out / RationalExpr(e.den)


__all__ = [
    "COORDINATES", "ExponentOverflowError", "NotACoordinateError", "ONE_EXPR", "ParseError",
    "Polynomial", "RationalExpr", "SingularPointError", "Symbol", "SymcoreError",
    "UndeclaredSymbolError", "ZERO_EXPR", "ZeroDenominatorError", "as_expr", "compile_expr",
    "compile_exprs", "const", "differentiate", "evaluate", "is_zero", "parse_expr",
    "reduce_radical", "substitute", "symbol", "symbol_table", "var",
]
