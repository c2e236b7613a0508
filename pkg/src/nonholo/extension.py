"""Riemann extension of the affine connection to six dimensions.

Coordinates are ``(x, y, z, psi1, psi2, psi3)`` and the metric is the block
matrix ``[[C, I], [I, 0]]`` with ``C_ij = -2 pi[k][i][j] psi_k``. Its inverse is
``[[0, I], [I, -C]]``, which is used directly instead of a numeric inversion.

Transport of the fiber coordinates along a base geodesic is available in
three forms: the fiber half of the 6D geodesic equations, the first-order
system for ``(psi, delta psi / ds)``, and the linear system
``psi'' + A psi' + B psi = 0``. In the curvature contraction of the transport
law the velocity pair sits on the upper-adjacent and second derivative slots,
``T[k][l] = riem[l][j][k][i] v_j v_i``; the antisymmetric pair contracted with
``v v`` would vanish identically.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import R3, Connection3, CurvatureTensor3, _params_key, determinant
from .integrators import IntegratorConfig, Trajectory, integrate
from .symcore import ONE_EXPR, ZERO_EXPR, RationalExpr, SingularPointError, compile_exprs, var

COORDS6 = ("x", "y", "z", "psi1", "psi2", "psi3")
BASE_LABELS = ("x", "y", "z", "vx", "vy", "vz")
LABELS6 = COORDS6 + ("vx", "vy", "vz", "vpsi1", "vpsi2", "vpsi3")


@dataclass(frozen=True, eq=False)
class ExtendedMetric6:
    connection: Connection3
    g: tuple
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def __getitem__(self, idx):
        a, b = idx
        return self.g[a][b]

    def numeric(self, params=None) -> "NumericExtension":
        key = _params_key(params)
        ne = self._cache.get(key)
        if ne is None:
            ne = NumericExtension(self, params)
            self._cache[key] = ne
        return ne

    def block_residuals(self):
        """Expressions that must all vanish for the block structure to hold."""
        psi = [var(f"psi{k + 1}") for k in R3]
        pi = self.connection.pi
        out = []
        for i in R3:
            for j in R3:
                out.append(self.g[i][3 + j] - (ONE_EXPR if i == j else ZERO_EXPR))
                out.append(self.g[3 + i][j] - (ONE_EXPR if i == j else ZERO_EXPR))
                out.append(self.g[3 + i][3 + j])
                expect = sum((pi[k][i][j] * psi[k] for k in R3), ZERO_EXPR) * -2
                out.append(self.g[i][j] - expect)
                out.append(self.g[i][j] - self.g[j][i])
        return out

    def determinant(self) -> RationalExpr:
        return determinant(self.g)


def build_extension(c: Connection3) -> ExtendedMetric6:
    psi = [var(f"psi{k + 1}") for k in R3]
    g = [[ZERO_EXPR] * 6 for _ in range(6)]
    for i in R3:
        for j in range(i, 3):
            e = sum((c.pi[k][i][j] * psi[k] for k in R3), ZERO_EXPR) * -2
            g[i][j] = g[j][i] = e
        g[i][3 + i] = g[3 + i][i] = ONE_EXPR
    return ExtendedMetric6(c, tuple(tuple(r) for r in g))


class NumericExtension:
    def __init__(self, m: ExtendedMetric6, params=None):
        self.extended = m
        self.base = m.connection.numeric(params)
        self._pairs = [(i, j) for i in R3 for j in range(i, 3)]
        exprs = [m.g[i][j] for i, j in self._pairs]
        exprs += [m.g[i][j].diff(v) for i, j in self._pairs for v in COORDS6]
        self._fn = compile_exprs(exprs, COORDS6, params, name="extended_metric")

    def metric_and_derivatives(self, X):
        """``(C, dC)`` with ``dC[i, j, c] = d C_ij / d X_c``."""
        vals = self._fn(*X)
        C = np.zeros((3, 3))
        dC = np.zeros((3, 3, 6))
        n = len(self._pairs)
        for p, (i, j) in enumerate(self._pairs):
            C[i, j] = C[j, i] = vals[p]
            d = vals[n + 6 * p:n + 6 * p + 6]
            dC[i, j] = dC[j, i] = d
        return C, dC

    def metric(self, X) -> np.ndarray:
        C, _ = self.metric_and_derivatives(X)
        g = np.zeros((6, 6))
        g[:3, :3] = C
        g[:3, 3:] = np.eye(3)
        g[3:, :3] = np.eye(3)
        return g

    def inverse_metric(self, C) -> np.ndarray:
        gi = np.zeros((6, 6))
        gi[:3, 3:] = np.eye(3)
        gi[3:, :3] = np.eye(3)
        gi[3:, 3:] = -C
        return gi

    def geodesic_rhs(self, state) -> np.ndarray:
        X, V = state[:6], state[6:]
        C, dC = self.metric_and_derivatives(X)
        dg = np.zeros((6, 6, 6))
        dg[:3, :3, :] = dC
        # lowered Christoffel contracted with V V: w_d = dg[d,c,b] V^b V^c - 1/2 dg[b,c,d] V^b V^c
        w = np.einsum("dcb,b,c->d", dg, V, V) - 0.5 * np.einsum("bcd,b,c->d", dg, V, V)
        return -self.inverse_metric(C) @ w

    def norm(self, state) -> float:
        X, V = state[:6], state[6:]
        return float(V @ self.metric(X) @ V)


def extended_geodesic_rhs(m: ExtendedMetric6, state, params=None) -> np.ndarray:
    ne = m.numeric(params)
    state = np.asarray(state, dtype=float)
    if ne.base.is_singular(state[:3]):
        raise SingularPointError(f"Delta vanishes at {tuple(state[:3])}")
    return ne.geodesic_rhs(state)


# -- transport of the fiber coordinates ----------------------------------------

class NumericCurvature:
    def __init__(self, r: CurvatureTensor3, params=None):
        exprs = [e for _, e in r.components()]
        self._fn = compile_exprs(exprs, ("x", "y", "z"), params, name="curvature")

    def __call__(self, pos) -> np.ndarray:
        return np.array(self._fn(*pos)).reshape(3, 3, 3, 3)


def transport_curvature(riem: np.ndarray, vel) -> np.ndarray:
    """``T[k, l] = riem[l, j, k, i] v_j v_i``."""
    return np.einsum("ljki,j,i->kl", riem, vel, vel)


def jacobi_matrices(nc, riem: np.ndarray, pos, vel):
    """``A, B`` of ``psi'' + A psi' + B psi = 0`` at one base state."""
    G = nc.gamma(pos)
    dG = nc.dgamma(pos)  # [l, j, k, i] = d_i G^l_jk
    acc = -np.einsum("jmn,m,n->j", G, vel, vel)
    A = -2.0 * np.einsum("ljk,j->kl", G, vel)
    B = (
        -np.einsum("ljki,i,j->kl", dG, vel, vel)
        - np.einsum("ljk,j->kl", G, acc)
        + np.einsum("mjk,lim,j,i->kl", G, G, vel, vel)
        + transport_curvature(riem, vel)
    )
    return A, B


def covariant_psi_acceleration(nc, riem: np.ndarray, pos, vel, psi, dpsi) -> np.ndarray:
    """Second derivative of psi implied by the covariant transport law, evaluated directly."""
    G = nc.gamma(pos)
    dG = nc.dgamma(pos)
    acc = -np.einsum("jmn,m,n->j", G, vel, vel)
    cov = dpsi - np.einsum("ljk,l,j->k", G, psi, vel)
    cov2 = -transport_curvature(riem, vel) @ psi
    d_conn = (
        np.einsum("ljki,i,j,l->k", dG, vel, vel, psi)
        + np.einsum("ljk,j,l->k", G, acc, psi)
        + np.einsum("ljk,j,l->k", G, vel, dpsi)
    )
    return cov2 + d_conn + np.einsum("ljk,j,l->k", G, vel, cov)


@dataclass
class JacobiSystem:
    s: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.B))):
            raise SingularPointError("A or B is not finite along the trajectory")


@dataclass
class InvariantE:
    s: np.ndarray
    E: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.E)


def psi_system_matrices(c: Connection3, r: CurvatureTensor3, traj: Trajectory, params=None) -> JacobiSystem:
    nc = c.numeric(params)
    nr = NumericCurvature(r, params)
    As, Bs = [], []
    for state in traj.states:
        pos, vel = state[:3], state[3:6]
        if nc.is_singular(pos):
            raise SingularPointError(f"Delta vanishes at {tuple(pos)}")
        A, B = jacobi_matrices(nc, nr(pos), pos, vel)
        As.append(A)
        Bs.append(B)
    return JacobiSystem(np.array(traj.s), np.array(As), np.array(Bs))


def invariant_E(j: JacobiSystem) -> InvariantE:
    """``E = B - A'/2 - A^2/4`` with ``A'`` from second-order finite differences."""
    if len(j.s) < 3:
        raise ValueError("at least three samples are needed for centred differences")
    dA = np.gradient(j.A, j.s, axis=0, edge_order=2)
    E = j.B - 0.5 * dA - 0.25 * np.einsum("nij,njk->nik", j.A, j.A)
    return InvariantE(np.array(j.s), E)


PSI_LABELS = BASE_LABELS + ("psi1", "psi2", "psi3", "dpsi1", "dpsi2", "dpsi3")


def integrate_transport(
    c: Connection3,
    r: CurvatureTensor3,
    base_init,
    psi0,
    dpsi0,
    cfg: IntegratorConfig,
    params=None,
    route: str = "covariant",
    s_eval=None,
) -> Trajectory:
    """Integrate a base geodesic together with the fiber coordinates.

    ``route="covariant"`` integrates ``(psi, delta psi)`` as a first-order system;
    ``route="jacobi"`` integrates ``psi'' = -A psi' - B psi``. Both report
    ``(psi, dpsi/ds)`` in the output columns.
    """
    nc = c.numeric(params)
    nr = NumericCurvature(r, params)
    base_init = np.asarray(base_init, dtype=float)

    if route == "jacobi":
        def rhs(s, u):
            pos, vel, psi, dpsi = u[:3], u[3:6], u[6:9], u[9:12]
            A, B = jacobi_matrices(nc, nr(pos), pos, vel)
            return np.concatenate([vel, nc.geodesic_rhs(u[:6]), dpsi, -A @ dpsi - B @ psi])

        y0 = np.concatenate([base_init, psi0, dpsi0])
        out = lambda u: u
    elif route == "covariant":
        def rhs(s, u):
            pos, vel, psi, cov = u[:3], u[3:6], u[6:9], u[9:12]
            G = nc.gamma(pos)
            T = transport_curvature(nr(pos), vel)
            dpsi = cov + np.einsum("ljk,l,j->k", G, psi, vel)
            dcov = np.einsum("ljk,l,j->k", G, cov, vel) - T @ psi
            return np.concatenate([vel, nc.geodesic_rhs(u[:6]), dpsi, dcov])

        G0 = nc.gamma(base_init[:3])
        cov0 = np.asarray(dpsi0, float) - np.einsum("ljk,l,j->k", G0, psi0, base_init[3:6])
        y0 = np.concatenate([base_init, psi0, cov0])

        def out(u):
            G = nc.gamma(u[:3])
            v = u.copy()
            v[9:12] = u[9:12] + np.einsum("ljk,l,j->k", G, u[6:9], u[3:6])
            return v
    else:
        raise ValueError("route must be 'covariant' or 'jacobi'")

    traj = integrate(rhs, y0, cfg, PSI_LABELS, singular=lambda u: nc.is_singular(u[:3]), s_eval=s_eval)
    traj.states = np.array([out(u) for u in traj.states])
    return traj
