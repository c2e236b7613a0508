"""Sparse multivariate polynomials with exact rational coefficients."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from . import symbols as sy

Coefficient = Fraction


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"polynomial coefficients must be exact rationals, got {type(c).__name__}")


@lru_cache(maxsize=None)
def _ordered_slots(n: int) -> tuple[int, ...]:
    return tuple(sorted(range(n), key=lambda i: sy.order_key(sy.slot_name(i))))


def grlex_key(m: int):
    """Sort key: larger key means earlier in the canonical (graded-lex) order."""
    order = _ordered_slots(sy.nslots())
    exps = tuple(sy.exponent(m, i) for i in order)
    return (sum(exps), exps)


class Polynomial:
    """Immutable polynomial: packed monomial -> nonzero Fraction."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = _as_fraction(c)
                if c:
                    clean[m] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({0: c})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        return cls._raw({sy.unit(sy.slot(name)): Fraction(1)})

    @classmethod
    def from_powers(cls, items) -> "Polynomial":
        """Build from an iterable of ``(coefficient, {name: exponent})``."""
        terms: dict[int, Fraction] = {}
        for c, powers in items:
            m = sy.monomial(powers)
            terms[m] = terms.get(m, Fraction(0)) + _as_fraction(c)
        return cls(terms)

    # -- inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and 0 in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get(0, Fraction(0))

    def symbols(self) -> set[str]:
        acc = 0
        for m in self._terms:
            acc |= m
        out = set()
        i = 0
        while acc:
            if acc & sy.EXP_MASK:
                out.add(sy.slot_name(i))
            acc >>= sy.SLOT_BITS
            i += 1
        return out

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(sy.unpack(m).values()) for m in self._terms)

    def degree_in(self, name: str) -> int:
        i = sy.slot(name)
        if not self._terms:
            return -1
        return max(sy.exponent(m, i) for m in self._terms)

    def leading(self):
        m = max(self._terms, key=grlex_key)
        return m, self._terms[m]

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if len(self._terms) < len(other._terms):
            a, b = other._terms, self._terms
        else:
            a, b = self._terms, other._terms
        out = dict(a)
        for m, c in b.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _as_fraction(c)
        if not c:
            return ZERO
        return Polynomial._raw({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return ZERO
        a, b = self._terms, other._terms
        if len(a) == 1 and 0 in a:
            return other.scale(a[0])
        if len(b) == 1 and 0 in b:
            return self.scale(b[0])
        out: dict[int, Fraction] = {}
        get = out.get
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = m1 + m2
                out[m] = get(m, 0) + c1 * c2
        guard = sy._guard_mask
        for m in out:
            if m & guard:
                sy.check_overflow(m)
        return Polynomial._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def divide_exact(self, other: "Polynomial"):
        """Quotient ``self / other`` if the division is exact, else ``None``."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return ZERO
        if other.is_constant():
            return self.scale(1 / other.constant_value())
        lm, lc = other.leading()
        lexp = sy.unpack(lm)
        rem = self
        quot: dict[int, Fraction] = {}
        limit = len(self) * (len(other) + 1) + 16
        while not rem.is_zero():
            m, c = rem.leading()
            mexp = sy.unpack(m)
            if any(mexp.get(k, 0) < e for k, e in lexp.items()):
                return None
            qm = m - lm
            qc = c / lc
            quot[qm] = quot.get(qm, Fraction(0)) + qc
            rem = rem - Polynomial._raw({qm: qc}) * other
            limit -= 1
            if limit < 0:
                return None
        return Polynomial(quot)

    # -- calculus and evaluation -------------------------------------------
    def diff(self, name: str) -> "Polynomial":
        i = sy.slot(name)
        u = sy.unit(i)
        out = {}
        for m, c in self._terms.items():
            e = sy.exponent(m, i)
            if e:
                out[m - u] = c * e
        return Polynomial._raw(out)

    def evaluate(self, values: dict) -> float:
        total = 0.0
        for m, c in self._terms.items():
            t = float(c)
            for name, e in sy.unpack(m).items():
                try:
                    v = values[name]
                except KeyError:
                    raise KeyError(f"no value assigned to symbol {name!r}") from None
                t *= v ** e
            total += t
        return total

    def specialize(self, values: dict) -> "Polynomial":
        """Exact substitution of rational numbers for some symbols."""
        vals = {sy.slot(k): _as_fraction(v) for k, v in values.items()}
        out: dict[int, Fraction] = {}
        for m, c in self._terms.items():
            for i, v in vals.items():
                e = sy.exponent(m, i)
                if e:
                    c = c * v ** e
                    m -= e * sy.unit(i)
            if c:
                out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    def collect(self, name: str) -> dict[int, "Polynomial"]:
        """Coefficients of the powers of ``name``."""
        i = sy.slot(name)
        groups: dict[int, dict] = {}
        for m, c in self._terms.items():
            e = sy.exponent(m, i)
            groups.setdefault(e, {})[m - e * sy.unit(i)] = c
        return {e: Polynomial._raw(t) for e, t in groups.items()}

    def substitute(self, name: str, num: "Polynomial", den: "Polynomial"):
        """Substitute ``name <- num/den``; returns ``(p, k)`` with value ``p / den**k``."""
        groups = self.collect(name)
        if not groups:
            return ZERO, 0
        k = max(groups)
        num_pows = [ONE]
        den_pows = [ONE]
        for _ in range(k):
            num_pows.append(num_pows[-1] * num)
            den_pows.append(den_pows[-1] * den)
        out = ZERO
        for e, coeff in groups.items():
            out = out + coeff * num_pows[e] * den_pows[k - e]
        return out, k

    def abs_coefficients(self) -> "Polynomial":
        return Polynomial._raw({m: abs(c) for m, c in self._terms.items()})

    # -- printing -----------------------------------------------------------
    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r})"


def _coerce(v):
    if isinstance(v, Polynomial):
        return v
    if isinstance(v, (int, Fraction)):
        return Polynomial.constant(v)
    return NotImplemented


def format_monomial(m: int) -> str:
    powers = sy.unpack(m)
    parts = []
    for name in sorted(powers, key=sy.order_key):
        e = powers[name]
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    out = []
    for i, (m, c) in enumerate(p.sorted_terms()):
        neg = c < 0
        a = -c if neg else c
        mono = format_monomial(m)
        coef = str(a)
        if not mono:
            body = coef
        elif a == 1:
            body = mono
        else:
            body = f"{coef}*{mono}"
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


ZERO = Polynomial()
ONE = Polynomial.constant(1)


def lcm_of_denominators(p: Polynomial) -> int:
    d = 1
    for c in p._terms.values():
        d = d * c.denominator // math.gcd(d, c.denominator)
    return d
