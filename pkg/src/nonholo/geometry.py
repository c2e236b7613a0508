"""Affine connection of a Pfaff form, its curvature, and derived direction forms.

The connection coefficients are ``pi[i][j][k] = N_i * S_jk / Delta`` with ``N``
the field, ``S`` the symmetrized Jacobian and ``Delta = |N|^2``. Indices are
0-based in code: ``pi[i][j][k]`` is the coefficient with upper index ``i``.

Curvature convention::

    riem[l][k][j][i] = d_j pi[l][i][k] - d_i pi[l][j][k]
                       + sum_m (pi[l][j][m] pi[m][i][k] - pi[l][i][m] pi[m][j][k])

Ricci: ``ricci[k][i] = sum_l riem[l][k][l][i]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .field import XYZ, VectorField3, numeric_field
from .symcore import (
    ZERO_EXPR,
    RationalExpr,
    SingularPointError,
    as_expr,
    compile_exprs,
    parse_expr,
    symbol_table,
    var,
)

R3 = range(3)

LEVI_CIVITA = {p: (1 if sum(p[i] > p[j] for i in R3 for j in R3 if i < j) % 2 == 0 else -1)
               for p in itertools.permutations(R3)}


def _params_key(params):
    if not params:
        return ()
    return tuple(sorted((k, Fraction(v) if not isinstance(v, float) else v) for k, v in params.items()))


@dataclass(frozen=True, eq=False)
class Connection3:
    field: VectorField3
    delta: RationalExpr
    pi: tuple  # pi[i][j][k]
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def numeric(self, params=None) -> "NumericConnection":
        key = _params_key(params)
        nc = self._cache.get(key)
        if nc is None:
            nc = NumericConnection(self, params)
            self._cache[key] = nc
        return nc

    def derivatives(self):
        """``dpi[i][j][k][l] = d pi[i][j][k] / d x_l`` (symmetric pairs computed once)."""
        d = self._cache.get("dpi")
        if d is None:
            d = [[[None] * 3 for _ in R3] for _ in R3]
            for i in R3:
                for j in R3:
                    for k in range(j, 3):
                        row = tuple(self.pi[i][j][k].diff(v) for v in XYZ)
                        d[i][j][k] = d[i][k][j] = row
            d = tuple(tuple(tuple(r) for r in a) for a in d)
            self._cache["dpi"] = d
        return d


class NumericConnection:
    """binary64 evaluators for one parameter specialization of a connection."""

    def __init__(self, c: Connection3, params=None):
        self.connection = c
        self.params = dict(params or {})
        self.field = numeric_field(c.field, self.params)
        self._pi = compile_exprs([c.pi[i][j][k] for i in R3 for j in R3 for k in R3], XYZ,
                                 self.params, name="connection")
        self._dpi = None

    def field_and_jacobian(self, pos):
        return self.field.with_jacobian(pos)

    def field_value(self, pos) -> np.ndarray:
        return self.field(pos)

    def delta(self, pos) -> float:
        n = self.field(pos)
        return float(n @ n)

    def is_singular(self, pos, rel=1e-12) -> bool:
        return self.field.is_singular(pos, rel)

    def gamma(self, pos) -> np.ndarray:
        return np.array(self._pi(*pos)).reshape(3, 3, 3)

    def dgamma(self, pos) -> np.ndarray:
        """``[i, j, k, l] = d pi[i][j][k] / d x_l``."""
        if self._dpi is None:
            d = self.connection.derivatives()
            exprs = [d[i][j][k][l] for i in R3 for j in R3 for k in R3 for l in R3]
            self._dpi = compile_exprs(exprs, XYZ, self.params, name="connection_derivatives")
        return np.array(self._dpi(*pos)).reshape(3, 3, 3, 3)

    def geodesic_rhs(self, state) -> np.ndarray:
        pos, vel = state[:3], state[3:6]
        g = self.gamma(pos)
        return -np.einsum("ijk,j,k->i", g, vel, vel)

    def pfaff_geodesic_rhs(self, state) -> np.ndarray:
        pos, vel = state[:3], state[3:6]
        n, jac = self.field_and_jacobian(pos)
        dn_ds = jac @ vel
        return -n * float(vel @ dn_ds) / float(n @ n)


def build_connection(f: VectorField3) -> Connection3:
    delta = f.delta()
    if delta.is_zero():
        raise SingularPointError("Delta = P^2 + Q^2 + R^2 vanishes identically")
    jac = f.jacobian()
    half = Fraction(1, 2)
    sym = [[(jac[j][k] + jac[k][j]) * half if j != k else jac[j][j] for k in R3] for j in R3]
    pi = []
    for i in R3:
        ni = f.components[i] / delta
        rows = []
        for j in R3:
            rows.append(tuple(ni * sym[j][k] if k >= j else None for k in R3))
        rows = [tuple(rows[j][k] if k >= j else rows[k][j] for k in R3) for j in R3]
        pi.append(tuple(rows))
    return Connection3(f, delta, tuple(pi))


def geodesic_rhs(c: Connection3, state, params=None) -> np.ndarray:
    """Acceleration ``-pi[i][j][k] v_j v_k`` of a first-kind geodesic."""
    nc = c.numeric(params)
    if nc.is_singular(state[:3]):
        raise SingularPointError(f"Delta vanishes at {tuple(state[:3])}")
    return nc.geodesic_rhs(np.asarray(state, dtype=float))


def pfaff_geodesic_rhs(f: VectorField3, state, params=None) -> np.ndarray:
    """Acceleration from the Pfaff-form system ``x'' = -N (v . dN/ds) / Delta``."""
    c = build_connection(f)
    return c.numeric(params).pfaff_geodesic_rhs(np.asarray(state, dtype=float))


# -- curvature ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurvatureTensor3:
    riem: tuple  # riem[l][k][j][i]

    def __getitem__(self, idx):
        return self.riem[idx]

    def components(self):
        for l, k, j, i in itertools.product(R3, R3, R3, R3):
            yield (l, k, j, i), self.riem[l][k][j][i]


def curvature_tensor(c: Connection3) -> CurvatureTensor3:
    pi = c.pi
    d = c.derivatives()
    riem = [[[[None] * 3 for _ in R3] for _ in R3] for _ in R3]
    for l in R3:
        for k in R3:
            for j in R3:
                riem[l][k][j][j] = ZERO_EXPR
                for i in range(j + 1, 3):
                    e = d[l][i][k][j] - d[l][j][k][i]
                    for m in R3:
                        e = e + pi[l][j][m] * pi[m][i][k] - pi[l][i][m] * pi[m][j][k]
                    riem[l][k][j][i] = e
                    riem[l][k][i][j] = -e
    return CurvatureTensor3(tuple(tuple(tuple(tuple(r) for r in b) for b in a) for a in riem))


def ricci(c: Connection3, r: CurvatureTensor3 | None = None):
    r = r or curvature_tensor(c)
    return tuple(tuple(sum((r[l][k][l][i] for l in R3), ZERO_EXPR) for i in R3) for k in R3)


def bianchi_residuals(r: CurvatureTensor3):
    """First Bianchi cyclic sums over the three lower indices."""
    out = {}
    for l, k, j, i in itertools.product(R3, R3, R3, R3):
        out[(l, k, j, i)] = r[l][k][j][i] + r[l][j][i][k] + r[l][i][k][j]
    return out


# -- direction forms ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DirectionForm:
    """``linear . u = 0`` together with ``u^T quadratic u = 0``."""

    linear: tuple
    quadratic: tuple

    def __post_init__(self):
        q = self.quadratic
        for j in R3:
            for k in R3:
                if not (q[j][k] == q[k][j]):
                    raise ValueError("quadratic part must be symmetric")

    def quadratic_expr(self, differentials=("dx", "dy", "dz")) -> RationalExpr:
        d = [var(n) for n in differentials]
        out = ZERO_EXPR
        for j in R3:
            for k in R3:
                out = out + self.quadratic[j][k] * d[j] * d[k]
        return out

    def linear_expr(self, differentials=("dx", "dy", "dz")) -> RationalExpr:
        d = [var(n) for n in differentials]
        return sum((self.linear[i] * d[i] for i in R3), ZERO_EXPR)


def symmetrized_jacobian(f: VectorField3):
    jac = f.jacobian()
    half = Fraction(1, 2)
    return tuple(tuple(jac[j][j] if j == k else (jac[j][k] + jac[k][j]) * half for k in R3)
                 for j in R3)


def asymptotic_form(f: VectorField3) -> DirectionForm:
    return DirectionForm(tuple(f.components), symmetrized_jacobian(f))


def curvature_line_form(f: VectorField3, differentials=("dx", "dy", "dz")) -> RationalExpr:
    """Determinant with columns ``2 S d``, ``N`` and ``d``, as a quadratic form in the differentials."""
    S = symmetrized_jacobian(f)
    d = [var(n) for n in differentials]
    col1 = [sum((S[i][j] * d[j] for j in R3), ZERO_EXPR) * 2 for i in R3]
    col2 = list(f.components)
    rows = [[col1[i], col2[i], d[i]] for i in R3]
    return determinant(rows)


def determinant(rows) -> RationalExpr:
    """Exact determinant by Laplace expansion with memoized minors."""
    n = len(rows)
    rows = [[as_expr(e) for e in r] for r in rows]
    memo = {}

    # sign alternates over the free columns only
    def expand(r, cols):
        if r == n:
            return None
        key = (r, cols)
        if key in memo:
            return memo[key]
        total = ZERO_EXPR
        free = [c for c in range(n) if not cols & (1 << c)]
        for pos, c in enumerate(free):
            e = rows[r][c]
            if e.is_zero():
                continue
            sub = expand(r + 1, cols | (1 << c))
            term = e if sub is None else e * sub
            total = total + term if pos % 2 == 0 else total - term
        memo[key] = total
        return total

    return expand(0, 0) if n else RationalExpr(1)


# -- Chern-Simons ------------------------------------------------------------

def chern_simons_density(c: Connection3, mode: str = "partial") -> RationalExpr:
    """``eps^{ijk} (G^p_{iq} D_j G^q_{kp} + 2/3 G^p_{iq} G^q_{jr} G^r_{kp})``.

    ``mode="partial"`` uses ``D_j = d_j``; ``mode="covariant"`` uses the
    connection's own covariant derivative with ``q`` upper and ``k, p`` lower.
    """
    if mode not in ("partial", "covariant"):
        raise ValueError("mode must be 'partial' or 'covariant'")
    G = c.pi
    d = c.derivatives()

    def D(q, k, p, j):
        e = d[q][k][p][j]
        if mode == "covariant":
            for m in R3:
                e = e + G[q][j][m] * G[m][k][p] - G[m][j][k] * G[q][m][p] - G[m][j][p] * G[q][k][m]
        return e

    two_thirds = Fraction(2, 3)
    total = ZERO_EXPR
    for (i, j, k), eps in LEVI_CIVITA.items():
        term = ZERO_EXPR
        for p in R3:
            for q in R3:
                g = G[p][i][q]
                if g.is_zero():
                    continue
                inner = D(q, k, p, j)
                for r in R3:
                    inner = inner + G[q][j][r] * G[r][k][p] * two_thirds
                term = term + g * inner
        total = total + term if eps > 0 else total - term
    return total


LORENZ_L = (
    "(2*b + 2 - 2*sigma)*x^2*y^2 + (3*sigma^2 + 4*sigma*r - 4*r*b - 2*b*sigma - 4*r)*z*x^2"
    " + (2*b + 2 - 2*sigma)*z^2*x^2"
    " + (-3*r*sigma^2 + 4*sigma^2*b - 5*sigma^3 + 2*b*sigma*r - 2*sigma*r^2 + 4*sigma^2"
    " + 2*b*r^2 + 2*r^2)*x^2"
    " + (-2*r*b - 4*r + 9*sigma^3 + 2*r*sigma^2)*y*x"
    " + (-2*sigma + 4 - 2*sigma^2 - 2*sigma*r + 2*b*sigma - 4*b^2)*z*y*x"
    " - ((b*sigma*r + 2*sigma^2 + sigma^2*b - sigma*z^2 - 2*sigma*r - sigma*r^2)*y - sigma*y^3)*x"
    " + (-2*sigma*b^2 + 2*b^3 - 2*b^2)*z^2"
    " + (-4*sigma^3 - sigma^2*b + 2 - 2*b - sigma^2 + sigma*r + (-sigma + b*sigma)*z"
    " - b*sigma*r - 2*sigma)*y^2"
    " + (-2*sigma*b^2 + 2*r*b^2 + 2*b^2*r*sigma - 2*b^2*sigma^2)*z"
)

LORENZ_M = (
    "(x^2 + b^2)*z^2 + ((-2*b + 2)*x*y - 2*r*x^2)*z + (sigma^2 + 1 + x^2)*y^2"
    " + (-2*sigma^2 - 2*r)*x*y + (sigma^2 + r^2)*x^2"
)


def lorenz_cs_polynomials():
    t = symbol_table("sigma", "r", "b", coordinates=XYZ)
    return parse_expr(LORENZ_L, t), parse_expr(LORENZ_M, t)


def lorenz_cs_reference(params=None) -> RationalExpr:
    """Closed-form Lorenz Chern-Simons density ``L / (2 M^2)`` as published."""
    L, M = lorenz_cs_polynomials()
    e = L / (M * M * 2)
    return e.specialize(params) if params else e
