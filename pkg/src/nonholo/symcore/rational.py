"""Rational expressions: exact num/den pairs compared by cross-multiplication."""
from __future__ import annotations

from fractions import Fraction

from . import symbols as sy
from .errors import NotACoordinateError, SingularPointError, ZeroDenominatorError
from .polynomial import ONE, ZERO, Polynomial

SINGULAR_THRESHOLD = 1e-300


class RationalExpr:
    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, _check=True):
        num = _poly(num)
        den = ONE if den is None else _poly(den)
        if _check and den.is_zero():
            raise ZeroDenominatorError("denominator is the zero polynomial")
        if not den.is_zero():
            num, den = _normalize(num, den)
        self.num = num
        self.den = den

    @classmethod
    def symbol(cls, name: str) -> "RationalExpr":
        return cls(Polynomial.variable(name))

    @classmethod
    def _unchecked(cls, num: Polynomial, den: Polynomial) -> "RationalExpr":
        return cls(num, den, _check=False)

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den == ONE

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return self.num.constant_value() / self.den.constant_value()

    def symbols(self) -> set[str]:
        return self.num.symbols() | self.den.symbols()

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        if self.den == other.den:
            return RationalExpr._unchecked(self.num + other.num, self.den)
        q = other.den.divide_exact(self.den) if len(other.den) >= len(self.den) else None
        if q is not None:
            return RationalExpr._unchecked(self.num * q + other.num, other.den)
        q = self.den.divide_exact(other.den) if len(self.den) >= len(other.den) else None
        if q is not None:
            return RationalExpr._unchecked(self.num + other.num * q, self.den)
        return RationalExpr._unchecked(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr._unchecked(-self.num, self.den)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return ZERO_EXPR
        return RationalExpr._unchecked(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            raise ZeroDenominatorError("division by an expression that is identically zero")
        return RationalExpr._unchecked(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            if self.num.is_zero():
                raise ZeroDenominatorError("negative power of zero")
            return RationalExpr._unchecked(self.den ** (-n), self.num ** (-n))
        return RationalExpr._unchecked(self.num ** n, self.den ** n)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return self.num == other.num
        return (self.num * other.den - other.num * self.den).is_zero()

    __hash__ = None

    # -- calculus -----------------------------------------------------------
    def diff(self, v) -> "RationalExpr":
        name = v.name if isinstance(v, sy.Symbol) else v
        if isinstance(v, sy.Symbol) and v.kind != "coordinate" or not sy.is_coordinate(name):
            raise NotACoordinateError(f"cannot differentiate with respect to parameter {name!r}")
        dn = self.num.diff(name)
        if self.den.is_constant():
            return RationalExpr._unchecked(dn, self.den)
        dd = self.den.diff(name)
        if dd.is_zero():
            return RationalExpr._unchecked(dn, self.den)
        return RationalExpr._unchecked(dn * self.den - self.num * dd, self.den * self.den)

    def evaluate(self, assignment) -> float:
        values = _float_assignment(assignment)
        d = self.den.evaluate(values)
        if abs(d) < SINGULAR_THRESHOLD:
            raise SingularPointError("denominator vanishes at the evaluation point")
        return self.num.evaluate(values) / d

    def specialize(self, values) -> "RationalExpr":
        """Exact substitution of rational numbers for symbols (parameters or coordinates)."""
        if not values:
            return self
        vals = {(k.name if isinstance(k, sy.Symbol) else k): v for k, v in values.items()}
        return RationalExpr._unchecked(self.num.specialize(vals), self.den.specialize(vals))

    def substitute(self, v, r) -> "RationalExpr":
        name = v.name if isinstance(v, sy.Symbol) else v
        r = _coerce(r)
        if name not in self.symbols():
            return self
        nn, kn = self.num.substitute(name, r.num, r.den)
        dn, kd = self.den.substitute(name, r.num, r.den)
        if kd >= kn:
            return RationalExpr._unchecked(nn * r.den ** (kd - kn), dn)
        return RationalExpr._unchecked(nn, dn * r.den ** (kn - kd))

    # -- printing -----------------------------------------------------------
    def __str__(self):
        if self.den == ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self):
        return f"RationalExpr({str(self)!r})"


def _poly(v) -> Polynomial:
    if isinstance(v, Polynomial):
        return v
    if isinstance(v, (int, Fraction)):
        return Polynomial.constant(v)
    raise TypeError(f"cannot build a polynomial from {type(v).__name__}")


def _normalize(num: Polynomial, den: Polynomial):
    """Make the denominator's leading coefficient 1 (constant denominators become 1)."""
    if num.is_zero():
        return ZERO, ONE
    if den.is_constant():
        c = den.constant_value()
        return (num if c == 1 else num.scale(1 / c)), ONE
    _, lc = den.leading()
    if lc != 1:
        inv = 1 / lc
        return num.scale(inv), den.scale(inv)
    return num, den


def _coerce(v):
    if isinstance(v, RationalExpr):
        return v
    if isinstance(v, (int, Fraction)):
        return RationalExpr(Polynomial.constant(v))
    if isinstance(v, Polynomial):
        return RationalExpr(v)
    return NotImplemented


def _float_assignment(assignment) -> dict:
    return {(k.name if isinstance(k, sy.Symbol) else k): float(v) for k, v in assignment.items()}


def as_expr(v) -> RationalExpr:
    out = _coerce(v)
    if out is NotImplemented:
        raise TypeError(f"cannot convert {type(v).__name__} to an expression")
    return out


ZERO_EXPR = RationalExpr(ZERO)
ONE_EXPR = RationalExpr(ONE)
