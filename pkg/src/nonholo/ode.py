"""Numerical integration of flows, geodesics, asymptotic lines and extended geodesics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .extension import BASE_LABELS, LABELS6, ExtendedMetric6
from .field import UndefinedPlaneError, VectorField3, numeric_field
from .geometry import Connection3
from .integrators import (
    BRANCH_LOSS,
    COMPLETED,
    SINGULAR_POINT,
    STEP_LIMIT,
    IntegratorConfig,
    Trajectory,
    integrate,
)
from .symcore import RationalExpr, SingularPointError, as_expr, reduce_radical, var

COLLISION_TOL = 1e-10


def integrate_flow(f: VectorField3, init, cfg: IntegratorConfig, params=None, s_eval=None) -> Trajectory:
    """Flow line of ``x' = P, y' = Q, z' = R``."""
    nf = numeric_field(f, params)
    return integrate(lambda s, u: nf(u), init, cfg, ("x", "y", "z"), s_eval=s_eval)


def integrate_geodesic(
    c: Connection3, f: VectorField3 | None, init, cfg: IntegratorConfig, params=None, s_eval=None
) -> Trajectory:
    """First-kind geodesic with the ``pfaff_contraction`` monitor ``P x' + Q y' + R z'``."""
    nc = c.numeric(params)
    nf = numeric_field(f, params) if f is not None else nc.field
    init = np.asarray(init, dtype=float)
    if nc.is_singular(init[:3]):
        raise SingularPointError(f"Delta vanishes at the initial point {tuple(init[:3])}")
    return integrate(
        lambda s, u: np.concatenate([u[3:6], nc.geodesic_rhs(u)]),
        init,
        cfg,
        BASE_LABELS,
        monitors={"pfaff_contraction": lambda s, u: float(nf(u[:3]) @ u[3:6])},
        singular=lambda u: nc.is_singular(u[:3]),
        s_eval=s_eval,
    )


def tangent_velocity(f: VectorField3, pos, direction, params=None) -> np.ndarray:
    """Project ``direction`` onto the plane orthogonal to the field at ``pos``."""
    n = numeric_field(f, params)(pos)
    if not np.any(n):
        raise UndefinedPlaneError(f"field vanishes at {tuple(np.asarray(pos, dtype=float).tolist())}")
    d = np.asarray(direction, dtype=float)
    return d - n * (n @ d) / (n @ n)


# -- asymptotic directions -----------------------------------------------------

@dataclass(frozen=True)
class AsymptoticDirection:
    direction: np.ndarray
    branch: int
    discriminant: float


@dataclass(frozen=True)
class DirectionSet:
    """Real asymptotic directions at a point; ``all_directions`` marks ``q == 0``."""

    directions: tuple
    discriminant: float
    all_directions: bool = False
    basis: tuple = ()

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, i):
        return self.directions[i]


def plane_basis(n) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n, dtype=float)
    nh = n / np.linalg.norm(n)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(nh)))] = 1.0
    e1 = np.cross(nh, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nh, e1)
    return e1, e2


def restricted_form(S, e1, e2):
    """Coefficients ``(a, b, c)`` of ``q = a al^2 + 2 b al be + c be^2``."""
    return float(e1 @ S @ e1), float(e1 @ S @ e2), float(e2 @ S @ e2)


def asymptotic_directions(f: VectorField3, point, params=None, *, _nf=None) -> DirectionSet:
    nf = _nf or numeric_field(f, params)
    n, J = nf.with_jacobian(point)
    if not np.any(n):
        raise UndefinedPlaneError(f"field vanishes at {tuple(point)}")
    S = 0.5 * (J + J.T)
    e1, e2 = plane_basis(n)
    a, b, c = restricted_form(S, e1, e2)
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0 or scale <= 1e-13 * np.abs(J).max():
        return DirectionSet((), 0.0, True, (e1, e2))
    disc = (b * b - a * c) / (scale * scale)
    if disc < -COLLISION_TOL:
        return DirectionSet((), disc, False, (e1, e2))
    root = math.sqrt(max(disc, 0.0)) * scale
    signs = (1.0,) if abs(disc) <= COLLISION_TOL else (1.0, -1.0)
    out = []
    for branch, sg in enumerate(signs):
        if abs(a) >= abs(c):
            al, be = -b + sg * root, a
        else:
            al, be = c, -b + sg * root
        u = al * e1 + be * e2
        u /= np.linalg.norm(u)
        out.append(AsymptoticDirection(u, branch, disc))
    return DirectionSet(tuple(out), disc, False, (e1, e2))


def brute_force_directions(f: VectorField3, point, params=None, samples=100_000):
    """Sign changes of ``u . S u`` on a sampled circle of the constraint plane.

    Independent of the closed form: the plane basis comes from an SVD and the
    roots from bisection between sign changes.
    """
    nf = numeric_field(f, params)
    n, J = nf.with_jacobian(point)
    S = 0.5 * (J + J.T)
    _, _, vt = np.linalg.svd(n.reshape(1, 3))
    b1, b2 = vt[1], vt[2]
    th = np.linspace(0.0, np.pi, samples, endpoint=False)
    U = np.outer(np.cos(th), b1) + np.outer(np.sin(th), b2)
    q = np.einsum("ni,ij,nj->n", U, S, U)
    qwrap = np.append(q, -q[0])  # q(theta + pi) = q(theta) while u flips sign; compare with q at pi

    def qf(t):
        u = math.cos(t) * b1 + math.sin(t) * b2
        return float(u @ S @ u)

    qwrap[-1] = qf(np.pi)
    roots = []
    for i in range(samples):
        lo, hi = (th[i], th[i + 1]) if i + 1 < samples else (th[i], np.pi)
        qlo, qhi = qwrap[i], qwrap[i + 1]
        if qlo == 0.0:
            roots.append(lo)
        elif qlo * qhi < 0:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                qm = qf(mid)
                if qm * qlo <= 0:
                    hi = mid
                else:
                    lo, qlo = mid, qm
            roots.append(0.5 * (lo + hi))
    return [math.cos(t) * b1 + math.sin(t) * b2 for t in roots]


def line_angle(u, v) -> float:
    """Angle between the lines spanned by ``u`` and ``v``."""
    c = abs(float(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, c))


def integrate_asymptotic(
    f: VectorField3, point, direction, cfg: IntegratorConfig, params=None
) -> Trajectory:
    """Continue an asymptotic line from ``point`` along ``direction``.

    Unit-speed RK4 on the direction field; at every stage the candidate with
    the largest dot product against the previous direction is taken. The run
    ends with ``branch_loss`` where no real direction exists.
    """
    nf = numeric_field(f, params)
    if isinstance(direction, AsymptoticDirection):
        direction = direction.direction
    p = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    h = cfg.step

    class _Lost(Exception):
        pass

    def pick(q, prev):
        ds = asymptotic_directions(f, q, _nf=nf)
        if ds.all_directions:
            n = nf(q)
            u = prev - n * (n @ prev) / (n @ n)
            return u / np.linalg.norm(u), 0.0
        if not len(ds):
            raise _Lost(ds.discriminant)
        best = max(ds.directions, key=lambda c: abs(float(c.direction @ prev)))
        u = best.direction
        return (u if u @ prev >= 0 else -u), ds.discriminant

    ds0 = asymptotic_directions(f, p, _nf=nf)
    n0 = nf(p)
    if abs(float(n0 @ d)) > 1e-8 * np.linalg.norm(n0):
        raise ValueError("initial direction does not lie in the constraint plane")
    disc0 = ds0.discriminant
    ss, ys, discs, cons = [0.0], [np.r_[p, d]], [disc0], [float(n0 @ d / np.linalg.norm(n0))]
    s = 0.0
    termination = COMPLETED
    steps = 0
    while s < cfg.s_end * (1 - 1e-14):
        if steps >= cfg.max_steps:
            termination = STEP_LIMIT
            break
        hh = min(h, cfg.s_end - s)
        try:
            k1, _ = pick(p, d)
            k2, _ = pick(p + hh / 2 * k1, k1)
            k3, _ = pick(p + hh / 2 * k2, k2)
            k4, _ = pick(p + hh * k3, k3)
            p_new = p + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if nf.is_singular(p_new):
                termination = SINGULAR_POINT
                break
            d_new, disc = pick(p_new, k4)
        except _Lost:
            termination = BRANCH_LOSS
            break
        except (SingularPointError, UndefinedPlaneError, ZeroDivisionError, FloatingPointError):
            termination = SINGULAR_POINT
            break
        p, d = p_new, d_new
        s += hh
        steps += 1
        n = nf(p)
        ss.append(s)
        ys.append(np.r_[p, d])
        discs.append(disc)
        cons.append(float(n @ d / np.linalg.norm(n)))
    return Trajectory(
        np.array(ss),
        np.array(ys),
        ("x", "y", "z", "ux", "uy", "uz"),
        {"discriminant": np.array(discs), "constraint": np.array(cons)},
        termination,
    )


# -- extended geodesics ------------------------------------------------------

def integrate_extended(m: ExtendedMetric6, init, cfg: IntegratorConfig, params=None, s_eval=None) -> Trajectory:
    """6D geodesic of the Riemann extension; monitors ``metric_norm = g(v, v)``."""
    ne = m.numeric(params)
    init = np.asarray(init, dtype=float)
    if ne.base.is_singular(init[:3]):
        raise SingularPointError(f"Delta vanishes at the initial point {tuple(init[:3])}")
    return integrate(
        lambda s, u: np.concatenate([u[6:], ne.geodesic_rhs(u)]),
        init,
        cfg,
        LABELS6,
        monitors={"metric_norm": lambda s, u: ne.norm(u)},
        singular=lambda u: ne.base.is_singular(u[:3]),
        s_eval=s_eval,
    )


def base_projection_deviation(traj6: Trajectory, m: ExtendedMetric6, cfg: IntegratorConfig, params=None):
    """Integrate the 3D geodesic on the same grid and return ``(max deviation, series)``."""
    st = traj6.states
    base = np.r_[st[0, :3], st[0, 6:9]]
    t3 = integrate_geodesic(m.connection, None, base, cfg, params, s_eval=traj6.s[1:])
    n = min(len(t3.s), len(traj6.s))
    dev = np.abs(t3.states[:n, :3] - st[:n, :3]).max(axis=1)
    traj6.monitors["base_deviation"] = np.r_[dev, np.full(len(traj6.s) - n, np.nan)]
    return float(dev.max()), dev


# -- power-law geodesics of the triple-product field ---------------------------

def power_law_quadratic(a, b, c):
    """Coefficients of ``(ac + c^2) K^2 + 2 b c K + (ab + b^2) = 0``."""
    a, b, c = (as_expr(v) if not isinstance(v, RationalExpr) else v for v in (_q(a), _q(b), _q(c)))
    return (a * c + c * c, b * c * 2, a * b + b * b)


def _q(v):
    if isinstance(v, (RationalExpr, int, Fraction)):
        return v
    if isinstance(v, str):
        return var(v)
    return Fraction(v)


def power_law_exponent(a, b, c, sign=-1) -> float:
    """Closed form ``-cb/(c^2+ac) + sign * sqrt(-cab(a+b+c))/(c^2+ac)``."""
    a, b, c = float(a), float(b), float(c)
    rad = -c * a * b * (a + b + c)
    if rad < 0:
        raise ValueError("no real power-law exponent for these parameters")
    den = c * c + a * c
    return -c * b / den + sign * math.sqrt(rad) / den


def power_law_residual(sign=-1) -> RationalExpr:
    """Quadratic evaluated at the closed-form exponent, reduced with ``w^2 = -cab(a+b+c)``.

    Zero (as an expression in ``a, b, c``) iff the closed form is a root for
    every parameter value.
    """
    a, b, c, w = var("a"), var("b"), var("c"), var("w")
    K = (-(c * b) + w * sign) / (c * c + a * c)
    A2, A1, A0 = power_law_quadratic(a, b, c)
    res = A2 * K * K + A1 * K + A0
    return reduce_radical(res, "w", -(c * a * b) * (a + b + c))


def power_law_initial_state(a, b, c, K, x0, y0, C, vy) -> np.ndarray:
    """Geodesic initial data on ``z = C y^K`` with zero Pfaff contraction."""
    a, b, c = float(a), float(b), float(c)
    z0 = C * y0 ** K
    vz = K * z0 * vy / y0
    vx = -(b * x0 * z0 * vy + c * x0 * y0 * vz) / (a * y0 * z0)
    return np.array([x0, y0, z0, vx, vy, vz])
