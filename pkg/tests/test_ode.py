import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonholo.extension import build_extension
from nonholo.field import CATALOG_NAMES, VectorField3, catalog, catalog_parameters, numeric_field
from nonholo.geometry import build_connection
from nonholo.integrators import (
    BRANCH_LOSS,
    COMPLETED,
    SINGULAR_POINT,
    STEP_LIMIT,
    IntegratorConfig,
    Trajectory,
    integrate,
    rk4_step,
    rkf45_step,
)
from nonholo.ode import (
    asymptotic_directions,
    base_projection_deviation,
    brute_force_directions,
    integrate_asymptotic,
    integrate_extended,
    integrate_flow,
    integrate_geodesic,
    line_angle,
    power_law_exponent,
    power_law_initial_state,
    power_law_quadratic,
    power_law_residual,
    tangent_velocity,
)
from nonholo.symcore import SingularPointError, const, var

x, y, z = var("x"), var("y"), var("z")


def const_field():
    return VectorField3(const(1), const(2), const(3))


# numeric parameter choices for every catalog entry
NUMERIC = {
    "lorenz": {"sigma": 10, "r": 28, "b": Fraction(8, 3)},
    "rossler": {"a": Fraction(1, 5), "b": Fraction(1, 5), "c": Fraction(57, 10)},
    "triple_product": {"a": 2, "b": -1, "c": 1},
    "quadratic10": dict(zip(catalog_parameters("quadratic10"), (1, -2, 3, 1, Fraction(1, 2), -1, 2, 1, -1, 1))),
    "vdp_projective": {"mu": 2},
    "cubic_node": {"a": 1, "b": 2},
    "quartic_center": {"A": 2, "a": 1},
}


class TestConfig:
    @pytest.mark.parametrize("kw", [{"method": "euler"}, {"step": 0}, {"rel_tol": -1}, {"max_steps": 0}, {"s_end": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


class TestIntegrator:
    def test_exponential(self):
        cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, s_end=1.0)
        tr = integrate(lambda s, u: u, [1.0], cfg, ("u",))
        assert tr.end[0] == pytest.approx(math.e, rel=1e-11)
        assert np.all(np.diff(tr.s) > 0)

    def test_rk4_exact_on_cubic(self):
        # y' = 3 s^2 is integrated exactly by a fourth-order method
        y = rk4_step(lambda s, u: np.array([3 * s * s]), 0.0, np.array([0.0]), 0.5)
        assert y[0] == pytest.approx(0.125, abs=1e-16)

    def test_rkf45_embedded_pair(self):
        y4, y5 = rkf45_step(lambda s, u: np.array([4 * s ** 3]), 0.0, np.array([0.0]), 1.0)
        assert y4[0] == pytest.approx(1.0, abs=1e-14) and y5[0] == pytest.approx(1.0, abs=1e-14)

    def test_s_eval_landing(self):
        grid = [0.1, 0.25, 0.7]
        tr = integrate(lambda s, u: -u, [1.0], IntegratorConfig(s_end=1.0), ("u",), s_eval=grid)
        np.testing.assert_array_equal(tr.s, [0.0, *grid])
        np.testing.assert_allclose(tr.states[:, 0], np.exp(-tr.s), rtol=1e-10)

    def test_step_limit(self):
        tr = integrate(lambda s, u: u, [1.0], IntegratorConfig(method="rk4", step=0.01, max_steps=5), ("u",))
        assert tr.termination == STEP_LIMIT and len(tr) == 6

    def test_singular_callback(self):
        tr = integrate(lambda s, u: np.ones(1), [0.0], IntegratorConfig(method="rk4", step=0.1, s_end=2.0),
                       ("u",), singular=lambda u: u[0] > 0.55)
        assert tr.termination == SINGULAR_POINT
        assert tr.end[0] <= 0.55 + 1e-12

    def test_blowup_is_singular(self):
        def rhs(s, u):
            if u[0] >= 1.0:
                raise SingularPointError("pole")
            return np.array([1.0 / (1.0 - u[0])])

        tr = integrate(rhs, [0.0], IntegratorConfig(s_end=1.0), ("u",))
        assert tr.termination == SINGULAR_POINT

    def test_monitors_same_length(self):
        tr = integrate(lambda s, u: -u, [1.0], IntegratorConfig(s_end=0.5), ("u",),
                       monitors={"twice": lambda s, u: 2 * u[0]})
        assert len(tr.monitors["twice"]) == len(tr.s)

    def test_csv_round_trip(self, tmp_path):
        tr = integrate(lambda s, u: -u, [1.0, 2.0], IntegratorConfig(s_end=0.3), ("a", "b"),
                       monitors={"m": lambda s, u: float(u.sum())})
        path = tmp_path / "t.csv"
        text = tr.to_csv(path)
        assert text.splitlines()[0] == "s,a,b,m"
        assert text.rstrip().endswith("# termination: completed")
        assert "# schema: nonholo/1" in text
        back = Trajectory.from_csv(path.read_text(), labels=("a", "b"))
        np.testing.assert_array_equal(back.states, tr.states)
        np.testing.assert_array_equal(back.monitors["m"], tr.monitors["m"])
        assert back.termination == COMPLETED


class TestFlow:
    def test_constant(self):
        f = VectorField3(const(1), const(0), const(0))
        tr = integrate_flow(f, [0, 0, 0], IntegratorConfig(s_end=2.0))
        np.testing.assert_allclose(tr.end, [2.0, 0.0, 0.0], atol=1e-14)

    def test_rk4_order_on_lorenz(self, lorenz):
        T = 0.5
        ref = integrate_flow(lorenz, [1, 1, 1], IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, s_end=T)).end
        errs = [np.abs(integrate_flow(lorenz, [1, 1, 1], IntegratorConfig(method="rk4", step=h, s_end=T)).end
                       - ref).max() for h in (0.01, 0.005, 0.0025)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 3.8), orders

    def test_triple_product_permutation(self):
        f = catalog("triple_product", {"a": 1, "b": 1, "c": 1})
        cfg = IntegratorConfig(s_end=0.3)
        grid = np.linspace(0.05, 0.3, 6)
        a = integrate_flow(f, [0.3, 0.5, 0.7], cfg, s_eval=grid)
        b = integrate_flow(f, [0.7, 0.3, 0.5], cfg, s_eval=grid)
        np.testing.assert_allclose(b.states, a.states[:, [2, 0, 1]], rtol=1e-9)


class TestGeodesic:
    def test_flat_straight_line(self):
        c = build_connection(const_field())
        v = np.array([1.0, 1.0, -1.0])
        tr = integrate_geodesic(c, None, np.r_[0, 0, 0, v], IntegratorConfig(s_end=3.0))
        np.testing.assert_allclose(tr.end[:3], 3 * v, atol=1e-12)

    def test_tangent_velocity(self, lorenz):
        v = tangent_velocity(lorenz, (1, 1, 1), (1, 2, 3))
        assert abs(numeric_field(lorenz)((1, 1, 1)) @ v) < 1e-12

    def test_lorenz_contraction(self, lorenz, lorenz_connection):
        v = tangent_velocity(lorenz, (1, 1, 1), (1, 0.3, 0.0))
        tr = integrate_geodesic(lorenz_connection, lorenz, np.r_[1, 1, 1, v], IntegratorConfig(s_end=10.0))
        assert tr.termination == COMPLETED
        assert np.abs(tr.monitors["pfaff_contraction"]).max() < 1e-8

    def test_singular_start(self):
        c = build_connection(VectorField3(x, y, z))
        with pytest.raises(SingularPointError):
            integrate_geodesic(c, None, np.r_[0, 0, 0, 1, 0, 0], IntegratorConfig())

    @pytest.mark.parametrize("name", CATALOG_NAMES)
    def test_contraction_conserved_for_catalog(self, name):
        f = catalog(name, NUMERIC[name])
        c = build_connection(f)
        nf = numeric_field(f)
        rng = np.random.default_rng(abs(hash(name)) % 2**32)
        cfg = IntegratorConfig(s_end=1.0)
        worst = 0.0
        for _ in range(20):
            pos = rng.uniform(0.5, 1.5, 3)
            if nf.is_singular(pos):
                continue
            v = tangent_velocity(f, pos, rng.normal(size=3))
            v /= np.linalg.norm(v)
            tr = integrate_geodesic(c, f, np.r_[pos, v], cfg)
            scale = np.linalg.norm(nf(pos))
            worst = max(worst, np.abs(tr.monitors["pfaff_contraction"]).max() / max(scale, 1.0))
        assert worst < 1e-8

    def test_power_law_linear_branch(self):
        # K = 1 root of the compatibility quadratic for (a, b, c) = (2, -1, 1)
        f = catalog("triple_product", NUMERIC["triple_product"])
        c = build_connection(f)
        init = power_law_initial_state(2, -1, 1, 1.0, 1.0, 1.0, 1.5, 0.4)
        tr = integrate_geodesic(c, f, init, IntegratorConfig(s_end=2.0))
        ratio = tr.column("z") / tr.column("y")
        assert np.abs(ratio - 1.5).max() < 1e-6


class TestPowerLaw:
    def test_quadratic_coefficients(self):
        A2, A1, A0 = power_law_quadratic(2, -1, 1)
        assert (A2.constant_value(), A1.constant_value(), A0.constant_value()) == (3, -2, -1)

    def test_exponent(self):
        assert power_law_exponent(2, -1, 1) == pytest.approx(-1 / 3, abs=1e-15)
        assert power_law_exponent(2, -1, 1, sign=1) == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(ValueError):
            power_law_exponent(1, 1, 1)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_closed_form_is_root(self, sign):
        assert power_law_residual(sign).is_zero()

    def test_initial_state_on_plane(self):
        f = catalog("triple_product", NUMERIC["triple_product"])
        st_ = power_law_initial_state(2, -1, 1, -1 / 3, 1.0, 2.0, 1.5, 0.3)
        assert st_[2] == pytest.approx(1.5 * 2.0 ** (-1 / 3))
        assert abs(numeric_field(f)(st_[:3]) @ st_[3:]) < 1e-14


class TestAsymptoticDirections:
    def test_constant_field(self):
        ds = asymptotic_directions(const_field(), (0.0, 0.0, 0.0))
        assert ds.all_directions and len(ds) == 0

    def test_elliptic_point(self, lorenz):
        ds = asymptotic_directions(lorenz, (1.0, 1.0, 1.0))
        assert len(ds) == 0 and ds.discriminant < 0
        assert brute_force_directions(lorenz, (1.0, 1.0, 1.0), samples=20_000) == []

    def test_lorenz_against_scan(self, lorenz):
        p = (1.0, 5.0, 30.0)
        ds = asymptotic_directions(lorenz, p)
        scan = brute_force_directions(lorenz, p)
        assert len(ds) == len(scan) == 2
        n = numeric_field(lorenz)(p)
        for d in ds:
            assert abs(np.linalg.norm(d.direction) - 1) < 1e-12
            assert abs(n @ d.direction) < 1e-10 * np.linalg.norm(n)
            assert min(line_angle(d.direction, u) for u in scan) < 1e-6
        assert {d.branch for d in ds} == {0, 1}

    def test_line_angle(self):
        assert line_angle([1, 0, 0], [-2, 0, 0]) == 0.0
        assert line_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)


@settings(max_examples=25)
@given(st.sampled_from(["lorenz", "rossler", "triple_product", "cubic_node"]),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_directions_match_scan(name, point):
    f = catalog(name, NUMERIC[name])
    nf = numeric_field(f)
    if nf.is_singular(point, rel=1e-6):
        return
    ds = asymptotic_directions(f, point)
    if ds.all_directions or abs(ds.discriminant) < 1e-6:
        return
    scan = brute_force_directions(f, point, samples=20_000)
    assert len(scan) == len(ds)
    for d in ds:
        assert min(line_angle(d.direction, u) for u in scan) < 1e-6


class TestAsymptoticLines:
    def test_constant_field_straight(self):
        f = const_field()
        d = tangent_velocity(f, (0, 0, 0), (1, 0, 0))
        tr = integrate_asymptotic(f, (0, 0, 0), d, IntegratorConfig(method="rk4", step=0.05, s_end=1.0))
        u = d / np.linalg.norm(d)
        np.testing.assert_allclose(tr.end[:3], u, atol=1e-12)

    def test_direction_must_be_admissible(self, lorenz):
        with pytest.raises(ValueError):
            integrate_asymptotic(lorenz, (1, 5, 30), (0, 0, 1), IntegratorConfig())

    def test_branch_loss(self, lorenz):
        # continue from a hyperbolic point towards the elliptic region around (1, 1, 1)
        p = np.array([1.0, 5.0, 30.0])
        ds = asymptotic_directions(lorenz, p)
        terms = {integrate_asymptotic(lorenz, p, d, IntegratorConfig(method="rk4", step=0.05, s_end=40.0)).termination
                 for d in ds}
        assert terms <= {COMPLETED, BRANCH_LOSS}

    def test_reversal(self, lorenz):
        p = np.array([1.0, 5.0, 30.0])
        d = asymptotic_directions(lorenz, p)[0]
        cfg = IntegratorConfig(method="rk4", step=1e-3, s_end=0.2)
        fwd = integrate_asymptotic(lorenz, p, d, cfg)
        back = integrate_asymptotic(lorenz, fwd.end[:3], -fwd.end[3:], cfg)
        assert np.abs(back.end[:3] - p).max() < 1e-8

    @pytest.mark.parametrize("sign", [1, -1])
    def test_vdp_lines(self, sign):
        mu = 2.0
        k = mu * mu / 2 + sign * math.sqrt(mu ** 4 - 4) / 2
        f = catalog("vdp_projective", {"mu": 2})
        p = np.array([0.3, 0.3 * k, 1.0])
        ds = asymptotic_directions(f, p)
        assert len(ds) >= 1
        tr = integrate_asymptotic(f, p, ds[0], IntegratorConfig(method="rk4", step=1e-2, s_end=0.5))
        slopes = tr.column("y") / tr.column("x")
        assert np.abs(slopes - k).max() < 1e-3


class TestExtended:
    def test_flat_linear(self):
        m = build_extension(build_connection(const_field()))
        init = np.r_[0, 0, 0, 1, 2, 3, 1, -1, 0.5, 0.2, 0.1, -0.3]
        tr = integrate_extended(m, init, IntegratorConfig(s_end=2.0))
        np.testing.assert_allclose(tr.end[:6], init[:6] + 2 * init[6:], atol=1e-12)

    def test_lorenz_norm_and_projection(self, lorenz_connection):
        m = build_extension(lorenz_connection)
        cfg = IntegratorConfig(s_end=5.0)
        init = np.r_[1, 1, 1, 0.2, -0.1, 0.4, 1, 0, 0, 0.5, 0.5, -0.5]
        tr = integrate_extended(m, init, cfg)
        assert tr.termination == COMPLETED
        assert np.ptp(tr.monitors["metric_norm"]) < 1e-8
        dev, series = base_projection_deviation(tr, m, cfg)
        assert dev < 1e-6 and len(series) == len(tr.s)
