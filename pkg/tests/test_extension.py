import numpy as np
import pytest

from nonholo.extension import (
    InvariantE,
    JacobiSystem,
    NumericCurvature,
    build_extension,
    covariant_psi_acceleration,
    extended_geodesic_rhs,
    integrate_transport,
    invariant_E,
    psi_system_matrices,
)
from nonholo.field import CATALOG_NAMES, VectorField3, catalog
from nonholo.geometry import build_connection, curvature_tensor
from nonholo.integrators import IntegratorConfig, Trajectory
from nonholo.ode import integrate_extended, integrate_geodesic
from nonholo.symcore import RationalExpr, SingularPointError, const

R3 = range(3)


@pytest.fixture(scope="module")
def flat():
    c = build_connection(VectorField3(const(1), const(2), const(3)))
    return c, build_extension(c), curvature_tensor(c)


@pytest.fixture(scope="module")
def lorenz_ext(lorenz_connection):
    return build_extension(lorenz_connection)


class TestMetric:
    def test_flat_block_form(self, flat):
        _, m, _ = flat
        g = m.numeric().metric(np.r_[0.1, 0.2, 0.3, 1.0, -2.0, 3.0])
        expected = np.block([[np.zeros((3, 3)), np.eye(3)], [np.eye(3), np.zeros((3, 3))]])
        np.testing.assert_array_equal(g, expected)

    def test_lorenz_entry(self, lorenz_connection, lorenz_ext):
        X = np.r_[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
        G = lorenz_connection.numeric().gamma(X[:3])
        g = lorenz_ext.numeric().metric(X)
        assert g[0, 0] == pytest.approx(-2 * G[0, 0, 0], abs=1e-15)
        X2 = np.r_[1.0, 1.0, 1.0, 0.5, -1.0, 2.0]
        g2 = lorenz_ext.numeric().metric(X2)
        assert g2[0, 0] == pytest.approx(-2 * (G[:, 0, 0] @ X2[3:]), rel=1e-14)
        assert g2[0, 0] != 0.0

    @pytest.mark.parametrize("name", CATALOG_NAMES)
    def test_determinant_and_blocks(self, name):
        m = build_extension(build_connection(catalog(name)))
        assert m.determinant() == RationalExpr(-1)
        assert all(e.is_zero() for e in m.block_residuals())

    def test_closed_form_inverse(self, lorenz_ext):
        ne = lorenz_ext.numeric()
        X = np.r_[0.5, 1.5, 2.0, 0.3, -0.7, 1.1]
        C, _ = ne.metric_and_derivatives(X)
        np.testing.assert_allclose(ne.inverse_metric(C) @ ne.metric(X), np.eye(6), atol=1e-14)


class TestExtendedRhs:
    def test_flat(self, flat):
        _, m, _ = flat
        np.testing.assert_array_equal(extended_geodesic_rhs(m, np.arange(12.0)), 0.0)

    def test_base_and_fiber(self, lorenz_connection, lorenz_ext, lorenz_curvature):
        rng = np.random.default_rng(5)
        nc = lorenz_connection.numeric()
        nr = NumericCurvature(lorenz_curvature)
        worst_base = worst_fiber = 0.0
        for _ in range(100):
            state = np.r_[rng.uniform(-3, 3, 3), rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)]
            acc = extended_geodesic_rhs(lorenz_ext, state)
            pos, psi, vel, dpsi = state[:3], state[3:6], state[6:9], state[9:12]
            base = nc.geodesic_rhs(np.r_[pos, vel])
            fiber = covariant_psi_acceleration(nc, nr(pos), pos, vel, psi, dpsi)
            scale = 1.0 + np.abs(acc).max()
            worst_base = max(worst_base, np.abs(acc[:3] - base).max() / scale)
            worst_fiber = max(worst_fiber, np.abs(acc[3:] - fiber).max() / scale)
        assert worst_base < 1e-12
        assert worst_fiber < 1e-10

    def test_singular(self):
        m = build_extension(build_connection(VectorField3(*(RationalExpr.symbol(v) for v in "xyz"))))
        with pytest.raises(SingularPointError):
            extended_geodesic_rhs(m, np.zeros(12))


class TestJacobi:
    def test_flat(self, flat):
        c, _, r = flat
        s = np.linspace(0, 1, 5)
        states = np.array([np.r_[t, 2 * t, 0.0, 1.0, 2.0, 0.0] for t in s])
        j = psi_system_matrices(c, r, Trajectory(s, states, ("x", "y", "z", "vx", "vy", "vz")))
        assert np.all(j.A == 0) and np.all(j.B == 0)

    def test_flat_transport_is_linear(self, flat):
        c, _, r = flat
        cfg = IntegratorConfig(method="rk4", step=0.1, s_end=2.0)
        tr = integrate_transport(c, r, [0, 0, 0, 1, 1, -1], [1.0, 2.0, 3.0], [0.5, -1.0, 0.0], cfg, route="jacobi")
        expected = np.outer(tr.s, [0.5, -1.0, 0.0]) + [1.0, 2.0, 3.0]
        np.testing.assert_allclose(tr.states[:, 6:9], expected, atol=1e-13)

    def test_E_without_A(self):
        s = np.linspace(0, 1, 6)
        B = np.random.default_rng(0).normal(size=(6, 3, 3))
        e = invariant_E(JacobiSystem(s, np.zeros((6, 3, 3)), B))
        np.testing.assert_array_equal(e.E, B)

    def test_E_constant_A(self):
        s = np.linspace(0, 1, 6)
        rng = np.random.default_rng(1)
        A0 = rng.normal(size=(3, 3))
        B = rng.normal(size=(6, 3, 3))
        e = invariant_E(JacobiSystem(s, np.repeat(A0[None], 6, axis=0), B))
        np.testing.assert_allclose(e.E, B - A0 @ A0 / 4, atol=1e-14)
        assert isinstance(e, InvariantE) and e.eigenvalues().shape == (6, 3)

    def test_E_needs_samples(self):
        with pytest.raises(ValueError):
            invariant_E(JacobiSystem(np.array([0.0, 1.0]), np.zeros((2, 3, 3)), np.zeros((2, 3, 3))))

    def test_nonfinite_rejected(self):
        with pytest.raises(SingularPointError):
            JacobiSystem(np.zeros(1), np.full((1, 3, 3), np.nan), np.zeros((1, 3, 3)))

    def test_lorenz_E_second_order(self, lorenz_connection, lorenz_curvature):
        cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, s_end=0.4)
        init = np.r_[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
        probe = np.array([0.1, 0.2, 0.3])
        errs = []
        Es = []
        for h in (0.05, 0.025, 0.0125, 0.00625):
            grid = np.arange(1, round(0.4 / h) + 1) * h
            tr = integrate_geodesic(lorenz_connection, None, init, cfg, s_eval=grid)
            e = invariant_E(psi_system_matrices(lorenz_connection, lorenz_curvature, tr))
            idx = [int(np.argmin(np.abs(e.s - p))) for p in probe]
            Es.append(e.E[idx])
        for a, b in zip(Es, Es[1:]):
            errs.append(np.abs(a - b).max())
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.8), orders


class TestCrossIntegration:
    def test_lorenz_psi_routes_agree(self, lorenz_connection, lorenz_ext, lorenz_curvature):
        cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, s_end=2.0)
        psi, dpsi = np.array([0.3, -0.2, 0.5]), np.array([1.0, 0.5, -0.5])
        base = np.r_[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
        t6 = integrate_extended(lorenz_ext, np.r_[base[:3], psi, base[3:], dpsi], cfg)
        grid = t6.s[1:]
        t_jac = integrate_transport(lorenz_connection, lorenz_curvature, base, psi, dpsi, cfg, route="jacobi", s_eval=grid)
        t_cov = integrate_transport(lorenz_connection, lorenz_curvature, base, psi, dpsi, cfg, route="covariant", s_eval=grid)
        assert t6.termination == t_cov.termination == t_jac.termination == "completed"
        assert np.abs(t6.states[:, 3:6] - t_jac.states[:, 6:9]).max() < 1e-6
        assert np.abs(t6.states[:, 3:6] - t_cov.states[:, 6:9]).max() < 1e-6
        assert np.abs(t_cov.states[:, 9:12] - t_jac.states[:, 9:12]).max() < 1e-6

    def test_bad_route(self, lorenz_connection, lorenz_curvature):
        with pytest.raises(ValueError):
            integrate_transport(lorenz_connection, lorenz_curvature, np.ones(6), np.zeros(3), np.zeros(3),
                                IntegratorConfig(), route="bogus")
