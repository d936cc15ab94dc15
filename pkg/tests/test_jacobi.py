import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from specsemi.jacobi import (
    JacobiParams,
    build_quadrature,
    eval_jacobi,
    eval_jacobi_derivative,
    jacobi_table,
    norm_constant,
    recurrence_coeffs,
    weight_values,
)

PARAM_SETS = [(0.0, 0.0), (1.5, 0.5), (-0.5, -0.5), (0.0, 2.5)]


def adaptive_weight_integral(f, a, b):
    """Independent oracle: adaptive Gauss-Kronrod integration of
    f(x) (1-x)^a (1+x)^b over (-1, 1)."""
    val, err = quad(lambda x: f(x) * (1.0 - x) ** a * (1.0 + x) ** b, -1.0, 1.0,
                    epsabs=1e-13, epsrel=1e-13, limit=200)
    assert err < 1e-10
    return val


class TestNormConstant:
    def test_legendre_mass(self):
        assert norm_constant(JacobiParams(0, 0), 0) == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_legendre_degree_one(self):
        # oracle: int x^2 dx = 2/3, so the norm of the monic-standard P_1 = x
        oracle = adaptive_weight_integral(lambda x: x * x, 0.0, 0.0)
        assert norm_constant(JacobiParams(0, 0), 1) == pytest.approx(math.sqrt(oracle), rel=1e-13)
        assert norm_constant(JacobiParams(0, 0), 1) == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-14)

    def test_asymmetric_mass(self):
        # oracle: direct quadrature of the weight's total mass
        oracle = adaptive_weight_integral(lambda x: np.ones_like(x), 1.5, 0.5)
        assert norm_constant(JacobiParams(1.5, 0.5), 0) ** 2 == pytest.approx(oracle, rel=1e-12)
        closed = 2.0**3 * math.gamma(2.5) * math.gamma(1.5) / (3.0 * math.gamma(3.0))
        assert norm_constant(JacobiParams(1.5, 0.5), 0) ** 2 == pytest.approx(closed, rel=1e-14)

    def test_large_degree_no_overflow(self):
        val = norm_constant(JacobiParams(0.5, 0.5), 1000)
        assert np.isfinite(val) and val > 0

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            JacobiParams(-1.0, 0.0)
        with pytest.raises(ValueError):
            JacobiParams(0.0, -1.5)
        with pytest.raises(ValueError):
            norm_constant(JacobiParams(0, 0), -1)


class TestRecurrence:
    def test_symmetric_diagonal_vanishes(self):
        rec = recurrence_coeffs(JacobiParams(0.75, 0.75), 50)
        assert np.max(np.abs(rec.b)) == 0.0

    def test_legendre_a1(self):
        # oracle: int x p1 p0 dx with orthonormal p1 = sqrt(3/2) x, p0 = 1/sqrt(2)
        oracle = adaptive_weight_integral(
            lambda x: x * (math.sqrt(1.5) * x) * (1.0 / math.sqrt(2.0)), 0.0, 0.0)
        rec = recurrence_coeffs(JacobiParams(0, 0), 2)
        assert rec.a[1] == pytest.approx(oracle, rel=1e-13)
        assert rec.a[1] == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-14)

    def test_offdiagonal_positive(self):
        for a, b in PARAM_SETS:
            rec = recurrence_coeffs(JacobiParams(a, b), 200)
            assert np.all(rec.a[1:] > 0)

    def test_limit_envelope(self):
        # |a_n - 1/2| <= 2/n for n >= 10; the limit itself is 1/2
        for a, b in PARAM_SETS:
            rec = recurrence_coeffs(JacobiParams(a, b), 2000)
            n = np.arange(10, 2001)
            assert np.all(np.abs(rec.a[10:] - 0.5) <= 2.0 / n)
            assert abs(rec.a[2000] - 0.5) < 1e-5
            assert abs(rec.b[2000]) < 1e-5

    def test_chebyshev_coefficients(self):
        rec = recurrence_coeffs(JacobiParams(-0.5, -0.5), 5)
        assert rec.a[1] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-14)
        assert np.allclose(rec.a[2:], 0.5)


class TestEvaluation:
    def test_degree_zero(self):
        for a, b in PARAM_SETS:
            p = JacobiParams(a, b)
            assert eval_jacobi(p, 0, 0.3) == pytest.approx(1.0 / norm_constant(p, 0), rel=1e-15)

    def test_legendre_p2_at_zero(self):
        # oracle: Legendre P2(0) = -1/2 scaled by sqrt((2n+1)/2)
        expected = -0.5 * math.sqrt(5.0 / 2.0)
        assert eval_jacobi(JacobiParams(0, 0), 2, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_chebyshev_proportionality(self, rng):
        # oracle: cos(n theta) identity for the (-1/2, -1/2) family
        p = JacobiParams(-0.5, -0.5)
        const = math.sqrt(2.0 / math.pi)
        for theta in rng.uniform(0.1, math.pi - 0.1, size=10):
            for n in (1, 3, 7, 20):
                assert eval_jacobi(p, n, math.cos(theta)) == pytest.approx(
                    const * math.cos(n * theta), abs=1e-12)

    def test_vectorized_matches_scalar(self):
        p = JacobiParams(1.5, 0.5)
        xs = np.linspace(-0.9, 0.9, 7)
        tab = jacobi_table(p, 6, xs)
        for i, x in enumerate(xs):
            assert tab[6, i] == pytest.approx(eval_jacobi(p, 6, float(x)), rel=1e-14)


class TestDerivative:
    def test_degree_zero(self):
        assert eval_jacobi_derivative(JacobiParams(0, 0), 0, 0.4) == 0.0

    def test_shifted_family_value(self):
        # p_1' = sqrt(1 * (1 + rho)) p_0^{(1,1)}
        p = JacobiParams(0, 0)
        lhs = eval_jacobi_derivative(p, 1, 0.3)
        rhs = math.sqrt(2.0) * eval_jacobi(JacobiParams(1, 1), 0, 0.3)
        assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_matches_finite_difference(self, rng):
        # oracle: central finite difference, h = 1e-5
        h = 1e-5
        for a, b in [(0.0, 0.0), (1.5, 0.5), (0.3, 1.2)]:
            p = JacobiParams(a, b)
            for n in (1, 2, 5, 9):
                for x in rng.uniform(-0.9, 0.9, size=4):
                    fd = (eval_jacobi(p, n, x + h) - eval_jacobi(p, n, x - h)) / (2 * h)
                    assert eval_jacobi_derivative(p, n, x) == pytest.approx(fd, abs=1e-6)

    def test_weighted_derivative_identity(self, rng):
        # (p_n w)' = -sqrt((n+1)(n+rho-1)) p_{n+1}^{(a-1,b-1)} w^{(a-1,b-1)},
        # checked against a finite difference of the left side; needs a, b > 0
        h = 1e-5
        for a, b in [(1.5, 0.5), (1.0, 2.0)]:
            p = JacobiParams(a, b)
            down = JacobiParams(a - 1.0, b - 1.0)
            for n in (0, 1, 4, 8):
                fac = -math.sqrt((n + 1) * (n + p.rho - 1.0))
                for x in rng.uniform(-0.8, 0.8, size=4):
                    lhs = (
                        eval_jacobi(p, n, x + h) * weight_values(a, b, x + h)
                        - eval_jacobi(p, n, x - h) * weight_values(a, b, x - h)
                    ) / (2 * h)
                    rhs = fac * eval_jacobi(down, n + 1, x) * weight_values(a - 1, b - 1, x)
                    assert lhs == pytest.approx(rhs, abs=1e-8 * max(1.0, abs(rhs)))


class TestQuadrature:
    def test_single_node_legendre(self):
        rule = build_quadrature(0.0, 0.0, 1)
        assert rule.nodes == pytest.approx([0.0], abs=1e-15)
        assert rule.weights == pytest.approx([2.0], rel=1e-14)

    def test_high_degree_exactness(self):
        rule = build_quadrature(0.0, 0.0, 20)
        got = rule.integrate(lambda x: x**38)
        assert got == pytest.approx(2.0 / 39.0, rel=1e-12)

    def test_asymmetric_total_mass(self):
        # oracle: 2^3 B(3/2, 5/2) through log-gamma
        rule = build_quadrature(0.5, 1.5, 40)
        log_beta = math.lgamma(1.5) + math.lgamma(2.5) - math.lgamma(4.0)
        assert rule.integrate(lambda x: np.ones_like(x)) == pytest.approx(
            2.0**3 * math.exp(log_beta), rel=1e-13)

    def test_rule_invariants_and_moments(self):
        rule = build_quadrature(0.5, 1.5, 10)
        assert np.all(np.diff(rule.nodes) > 0)
        assert rule.nodes[0] > -1 and rule.nodes[-1] < 1
        assert np.all(rule.weights > 0)
        assert rule.exactness_degree == 19
        for k in range(0, rule.exactness_degree + 1, 3):
            oracle = adaptive_weight_integral(lambda x, k=k: x**k, 0.5, 1.5)
            assert rule.integrate(lambda x, k=k: x**k) == pytest.approx(oracle, rel=1e-12, abs=1e-13)

    def test_invalid_exponents(self):
        with pytest.raises(ValueError):
            build_quadrature(-1.0, 0.0, 5)
        with pytest.raises(ValueError):
            build_quadrature(0.0, 0.0, 0)


class TestInvariants:
    def test_orthonormality(self):
        for a, b in PARAM_SETS:
            rule = build_quadrature(a, b, 50)
            tab = jacobi_table(JacobiParams(a, b), 40, rule.nodes)
            gram = (tab * rule.weights) @ tab.T
            assert np.max(np.abs(gram - np.eye(41))) <= 1e-10

    def test_three_term_residual(self, rng):
        for a, b in [(0.0, 0.0), (1.5, 0.5)]:
            p = JacobiParams(a, b)
            x = rng.uniform(-1, 1, size=100)
            tab = jacobi_table(p, 101, x)
            rec = recurrence_coeffs(p, 101)
            for n in (1, 10, 50, 100):
                resid = x * tab[n] - rec.a[n + 1] * tab[n + 1] - rec.b[n] * tab[n] - rec.a[n] * tab[n - 1]
                assert np.max(np.abs(resid)) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(min_value=-1.0, max_value=1.0), n=st.integers(min_value=1, max_value=60))
    def test_three_term_residual_property(self, x, n):
        p = JacobiParams(0.25, 1.25)
        tab = jacobi_table(p, n + 1, np.array([x]))
        rec = recurrence_coeffs(p, n + 1)
        resid = x * tab[n, 0] - rec.a[n + 1] * tab[n + 1, 0] - rec.b[n] * tab[n, 0] - rec.a[n] * tab[n - 1, 0]
        assert abs(resid) <= 1e-10 * max(1.0, np.max(np.abs(tab[: n + 2, 0])))

    def test_sup_bound_envelope(self):
        # max_x |p_n| w^{a/2+1/4, b/2+1/4} stays bounded in n (a, b >= -1/2):
        # the running maximum over n <= 500 must not exceed the n <= 60 level
        x = np.linspace(-1, 1, 2001)
        for a, b in [(0.0, 0.0), (1.5, 0.5), (-0.5, -0.5)]:
            wf = weight_values(a / 2 + 0.25, b / 2 + 0.25, x)
            tab = jacobi_table(JacobiParams(a, b), 500, x)
            maxima = np.max(np.abs(tab * wf[None, :]), axis=1)
            assert maxima.max() <= 1.001 * maxima[:61].max()
            assert maxima.max() < 1.0
