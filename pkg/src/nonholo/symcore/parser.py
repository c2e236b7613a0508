"""Recursive-descent parser for the expression grammar.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ ("^" | "**") ["-"] integer ] ;
    atom    = number | identifier | "(" expr ")" ;
    number  = digit { digit } [ "." digit { digit } ] ;

Identifiers must be declared in the symbol table. The Unicode minus sign and
the Greek letters used in the catalog (σ, μ) are accepted as aliases.
"""
from __future__ import annotations

import re
from fractions import Fraction

from . import symbols as sy
from .errors import ParseError, UndeclaredSymbolError, ZeroDenominatorError
from .polynomial import Polynomial
from .rational import RationalExpr

ALIASES = {"σ": "sigma", "μ": "mu", "Ψ₁": "psi1", "Ψ₂": "psi2", "Ψ₃": "psi3", "Δ": "Delta"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<id>Ψ[₁₂₃]|[^\W\d]\w*)|(?P<op>\*\*|[-+*/^()−]))"
)

DEFAULT_SYMBOLS = frozenset(sy.COORDINATES)


def symbol_table(*parameters: str, coordinates=sy.COORDINATES) -> frozenset[str]:
    return frozenset(coordinates) | frozenset(parameters)


class _Parser:
    def __init__(self, text: str, table):
        self.text = text
        self.table = table
        self.tokens = self._tokenize(text)
        self.i = 0

    def _tokenize(self, text):
        toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[start]!r}", start, text)
            kind = m.lastgroup
            val = m.group(kind)
            if val == "−":
                val = "-"
            toks.append((kind, val, m.start(kind)))
            pos = m.end()
        toks.append(("end", "", len(text)))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, val):
        kind, v, pos = self.take()
        if v != val:
            raise ParseError(f"expected {val!r}, found {v or 'end of input'!r}", pos, self.text)

    def parse(self) -> RationalExpr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {v!r}", pos, self.text)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise ZeroDenominatorError(f"division by the zero polynomial at position {pos}")
                e = e / rhs
        return e

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v in ("+", "-"):
            self.take()
            e = self.unary()
            return -e if v == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        kind, v, pos = self.peek()
        if kind == "op" and v in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, v, pos = self.take()
            if kind != "num" or "." in v:
                raise ParseError("exponent must be an integer literal", pos, self.text)
            n = sign * int(v)
            if n < 0 and base.is_zero():
                raise ZeroDenominatorError(f"negative power of zero at position {pos}")
            return base ** n
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return RationalExpr(Polynomial.constant(Fraction(v)))
        if kind == "id":
            name = ALIASES.get(v, v)
            if name not in self.table:
                raise UndeclaredSymbolError(f"undeclared symbol {v!r}", pos, self.text)
            return RationalExpr.symbol(name)
        if v == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {v or 'end of input'!r}", pos, self.text)


def parse_expr(text: str, table=None) -> RationalExpr:
    """Parse ``text`` into an exact expression.

    ``table`` is an iterable of declared symbol names (or ``Symbol`` objects);
    it defaults to the coordinates only.
    """
    if table is None:
        names = DEFAULT_SYMBOLS
    else:
        names = frozenset(t.name if isinstance(t, sy.Symbol) else t for t in table)
    return _Parser(text, names).parse()
