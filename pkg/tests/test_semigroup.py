import math

import numpy as np
import pytest
from fractions import Fraction

from specsemi import (
    BasisDescriptor,
    NumericalConsistencyError,
    SequenceData,
    SymbolSpec,
    apply_semigroup,
    build_generator,
    build_kernel,
    compose_check,
    evolve_ivp,
    evolve_methods,
    geometric_t_grid,
    limit_stencil,
    maximal_operator,
    recurrence_coeffs,
    symbol_row_limits,
)
from specsemi.jacobi import JacobiParams


def bessel_series(k: int, t: float) -> float:
    """Oracle: exp(-t) I_k(t) by the ascending power series in log space."""
    if t == 0.0:
        return 1.0 if k == 0 else 0.0
    k = abs(k)
    total = 0.0
    for j in range(0, 250):
        log_term = (k + 2 * j) * math.log(t / 2.0) - math.lgamma(j + 1) - math.lgamma(j + k + 1)
        term = math.exp(log_term - t)
        total += term
        if j > 4 and term < 1e-22 * max(total, 1e-300):
            break
    return total


def all_bases(xsys):
    return [
        (BasisDescriptor.classical(0.0, 0.0), SymbolSpec.from_coeffs([0, 1])),
        (BasisDescriptor.exceptional(xsys), SymbolSpec.from_coeffs(xsys.q_poly.coef)),
        (BasisDescriptor.dunkl(0.0, 0.0), SymbolSpec.from_coeffs([0, 1])),
        (BasisDescriptor.fourier(), SymbolSpec.from_coeffs([0, 1])),
    ]


class TestSymbolSpec:
    def test_cos_symbol_max(self):
        s = SymbolSpec.from_coeffs([0, 1])
        assert s.s_max == 1.0
        assert s.degree == 1

    def test_interior_maximum(self):
        # s = -x^2 peaks at x = 0
        s = SymbolSpec.from_coeffs([0, 0, -1])
        assert s.s_max == pytest.approx(0.0, abs=1e-15)
        grid = np.linspace(-1, 1, 10001)
        assert np.all(s.values(grid) <= s.s_max + 1e-12)

    def test_supremum_dominates_grid(self, xsys):
        s = SymbolSpec.from_coeffs(xsys.q_poly.coef)
        grid = np.linspace(-1, 1, 10001)
        assert np.all(s.values(grid) <= s.s_max + 1e-12)
        assert s.s_max == pytest.approx(xsys.q_poly(1.0), abs=1e-14)


class TestKernelBasics:
    def test_identity_at_t0_all_bases(self, xsys):
        for basis, sym in all_bases(xsys):
            table = build_kernel(basis, sym, 0.0, 24)
            assert np.max(np.abs(table.entries - np.eye(table.size))) <= 1e-10

    def test_bounds_and_row_norms(self, xsys):
        for basis, sym in all_bases(xsys):
            for t in (0.1, 1.0, 10.0):
                table = build_kernel(basis, sym, t, 24)
                assert np.max(np.abs(table.entries)) <= 1.0 + 1e-12
                assert np.max(table.row_norms()) <= 1.0 + 1e-10
                assert np.max(np.abs(table.entries - table.entries.T)) == 0.0

    def test_fourier_matches_bessel_series(self):
        basis = BasisDescriptor.fourier()
        sym = SymbolSpec.from_coeffs([0, 1])
        for t in (0.1, 1.0, 10.0):
            table = build_kernel(basis, sym, t, 16)
            worst = 0.0
            for n in table.indices:
                for m in table.indices:
                    ref = bessel_series(int(n) - int(m), t)
                    worst = max(worst, abs(table.value(int(n), int(m)) - ref))
            assert worst <= 1e-10

    def test_fourier_frozen_values(self):
        # spot values of exp(-t) I_k(t), frozen from the series oracle
        basis = BasisDescriptor.fourier()
        sym = SymbolSpec.from_coeffs([0, 1])
        table = build_kernel(basis, sym, 1.0, 6)
        assert table.value(0, 0) == pytest.approx(4.657596075936404e-01, abs=1e-12)
        assert table.value(3, 2) == pytest.approx(2.079104153497084e-01, abs=1e-12)

    def test_long_time_decay(self):
        # entries decay like a power of 1/t once s < s_max off a null set;
        # at t = 1e6 the two-sided heat kernel is below 1e-3 but far above
        # machine zero, so only the qualitative collapse is asserted
        basis = BasisDescriptor.fourier()
        sym = SymbolSpec.from_coeffs([0, 1])
        t3 = build_kernel(basis, sym, 1e3, 8)
        t6 = build_kernel(basis, sym, 1e6, 8)
        assert np.max(np.abs(t6.entries)) < np.max(np.abs(t3.entries))
        assert np.max(np.abs(t6.entries)) <= 1e-3
        assert t6.value(0, 0) == pytest.approx(bessel_series(0, 1e6), rel=1e-8)

    def test_negative_time_rejected(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        with pytest.raises(ValueError):
            build_kernel(basis, SymbolSpec.from_coeffs([0, 1]), -1.0, 8)

    def test_exceptional_requires_own_symbol(self, xsys, xbasis):
        with pytest.raises(ValueError):
            build_kernel(xbasis, SymbolSpec.from_coeffs([0, 1]), 1.0, 8)


class TestApply:
    def test_delta_t0(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        table = build_kernel(basis, SymbolSpec.from_coeffs([0, 1]), 0.0, 16)
        out = apply_semigroup(table, SequenceData.delta(0))
        assert out.values[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(out.values[1:])) <= 1e-10

    def test_delta_gives_kernel_column(self):
        basis = BasisDescriptor.classical(0.5, 0.5)
        table = build_kernel(basis, SymbolSpec.from_coeffs([0, 1]), 0.7, 16)
        out = apply_semigroup(table, SequenceData.delta(3))
        np.testing.assert_allclose(out.values, table.entries[:, 3], atol=1e-15)

    def test_support_outside_table(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        table = build_kernel(basis, SymbolSpec.from_coeffs([0, 1]), 0.5, 8)
        with pytest.raises(ValueError):
            apply_semigroup(table, SequenceData.delta(9))

    def test_contraction_random(self, xsys, rng):
        for basis, sym in all_bases(xsys):
            tables = [build_kernel(basis, sym, t, 32) for t in (1e-3, 0.1, 1.0, 10.0, 1e3)]
            idx = tables[0].indices
            inner = idx[np.abs(idx) <= 16]
            for _ in range(50):
                sup = rng.choice(inner, size=7, replace=False)
                f = SequenceData(support=sup, values=rng.standard_normal(7))
                for tb in tables:
                    assert apply_semigroup(tb, f).norm2() <= f.norm2() * (1 + 1e-12)

    def test_positive_definiteness(self, xsys, rng):
        for basis, sym in all_bases(xsys):
            for t in (0.1, 1.0, 100.0):
                tb = build_kernel(basis, sym, t, 24)
                for _ in range(20):
                    f = rng.standard_normal(tb.size)
                    assert f @ tb.entries @ f >= -1e-10 * (f @ f)


class TestComposition:
    def test_t_zero_exact(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        k0 = build_kernel(basis, sym, 0.0, 32)
        assert compose_check(k0, k0, build_kernel(basis, sym, 0.0, 32)) <= 1e-10

    def test_fourier_bessel_addition(self):
        basis = BasisDescriptor.fourier()
        sym = SymbolSpec.from_coeffs([0, 1])
        k1 = build_kernel(basis, sym, 0.4, 48)
        k2 = build_kernel(basis, sym, 1.1, 48)
        k12 = build_kernel(basis, sym, 1.5, 32)
        assert compose_check(k1, k2, k12) <= 1e-9

    def test_jacobi_semigroup_law(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        k1 = build_kernel(basis, sym, 0.5, 96)
        k2 = build_kernel(basis, sym, 1.5, 96)
        k12 = build_kernel(basis, sym, 2.0, 64)
        assert compose_check(k1, k2, k12) <= 1e-8

    def test_mismatched_windows_rejected(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        k1 = build_kernel(basis, sym, 0.5, 16)
        k2 = build_kernel(basis, sym, 0.5, 24)
        with pytest.raises(ValueError):
            compose_check(k1, k2, k1)


class TestStrongContinuity:
    def test_smooth_sequence(self, xsys):
        smooth = SequenceData(
            support=np.arange(5),
            values=np.array([1.0 / math.factorial(i) for i in range(5)]))
        for basis, sym in all_bases(xsys):
            gaps = []
            for t in (1.0, 0.1, 0.01, 0.001):
                tb = build_kernel(basis, sym, t, 32)
                wf = apply_semigroup(tb, smooth)
                gaps.append(float(np.linalg.norm(wf.values - smooth.to_dense(tb.indices))))
            assert gaps[-1] <= gaps[0]
            assert gaps[-1] <= 0.1 * smooth.norm2()


class TestMaximal:
    def test_delta_attained_at_zero(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        out = maximal_operator(basis, sym, SequenceData.delta(0),
                               geometric_t_grid(points=33), n=16)
        assert out.values[out.support.tolist().index(0)] == pytest.approx(1.0, abs=1e-12)

    def test_dominates_abs_f(self, rng):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        f = SequenceData(support=np.arange(6), values=rng.standard_normal(6))
        out = maximal_operator(basis, sym, f, geometric_t_grid(points=33), n=24)
        dense = f.to_dense(out.support)
        assert np.all(out.values >= np.abs(dense) - 1e-14)

    def test_l2_bound_empirical(self, rng):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        grid = geometric_t_grid(points=65)
        worst = 0.0
        for _ in range(100):
            f = SequenceData(support=np.arange(8), values=rng.standard_normal(8))
            out = maximal_operator(basis, sym, f, grid, n=40, refine=False)
            worst = max(worst, np.linalg.norm(out.values) / f.norm2())
        assert worst <= 10.0

    def test_grid_refinement_stability(self, rng):
        # with local refinement the scan result is grid-independent
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        f = SequenceData(support=np.arange(5), values=rng.standard_normal(5))
        w1 = maximal_operator(basis, sym, f, geometric_t_grid(points=257), n=48)
        w2 = maximal_operator(basis, sym, f, geometric_t_grid(points=513), n=48)
        rel = np.max(np.abs(w1.values - w2.values) / np.maximum(np.abs(w2.values), 1e-30))
        assert rel <= 1e-6

    def test_grid_validation(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        with pytest.raises(ValueError):
            maximal_operator(basis, sym, SequenceData.delta(0), np.array([]))
        with pytest.raises(ValueError):
            maximal_operator(basis, sym, SequenceData.delta(0), np.array([1.0, 0.5]))


class TestGenerator:
    def test_classical_tridiagonal(self):
        basis = BasisDescriptor.classical(0.3, 1.1)
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 24)
        rec = recurrence_coeffs(JacobiParams(0.3, 1.1), 25)
        assert gen.bandwidth == 1
        for n in range(24):
            assert gen.u(n, 0) == pytest.approx(rec.b[n], abs=1e-12)
            if n >= 1:
                assert gen.u(n, -1) == pytest.approx(rec.a[n], abs=1e-12)
            if n < 24:
                assert gen.u(n, 1) == pytest.approx(rec.a[n + 1], abs=1e-12)

    def test_band_symmetry_relation(self, xsys):
        # u_{k,j} = u_{k+j,-j}
        for basis, sym in all_bases(xsys):
            gen = build_generator(basis, sym, 20)
            L = gen.bandwidth
            for k in range(gen.size):
                for j in range(-L, L + 1):
                    if 0 <= k + j < gen.size:
                        assert gen.u(k, j) == pytest.approx(gen.u(k + j, -j), abs=1e-10)

    def test_constant_symbol_zero_stencil(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([3.5])
        gen = build_generator(basis, sym, 16)
        stencil = limit_stencil(gen)
        assert np.max(np.abs(stencil)) <= 1e-12

    def test_classical_limit_stencil_discrete_laplacian(self):
        # generator rows tend to (1, -2, 1)/2, the half-speed second difference
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 400)
        stencil = limit_stencil(gen)
        np.testing.assert_allclose(stencil, np.array([1.0, -2.0, 1.0]) / 2.0, atol=2e-5)

    def test_symbol_row_limits_classical(self):
        u = symbol_row_limits(SymbolSpec.from_coeffs([0, 1]))
        np.testing.assert_allclose(u, [0.0, 0.5], atol=1e-15)

    def test_symbol_row_limits_worked_flow(self, xsymbol):
        # Chebyshev coefficients of Q give (-3/8, 9/16, -3/16, 1/48)
        u = symbol_row_limits(xsymbol)
        expected = [Fraction(-3, 8), Fraction(9, 16), Fraction(-3, 16), Fraction(1, 48)]
        np.testing.assert_allclose(u, [float(e) for e in expected], atol=1e-14)

    def test_quadratic_symbol_band(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0.0, 0.0, 1.0])  # s = x^2
        gen = build_generator(basis, sym, 20)
        assert gen.bandwidth == 2
        assert gen.s_max == 1.0


class TestEvolve:
    def test_t0_identity(self, rng):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 32)
        f = SequenceData(support=np.arange(4), values=rng.standard_normal(4))
        for method in ("kernel", "band_expm"):
            out = evolve_ivp(gen, f, 0.0, method=method)
            np.testing.assert_allclose(out.values, f.to_dense(out.support), atol=1e-12)

    def test_methods_agree_classical(self, rng):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 64)
        f = SequenceData(support=np.arange(6), values=rng.standard_normal(6))
        for t in (0.5, 2.0, 5.0):
            _, _, gap = evolve_methods(gen, f, t)
            assert gap <= 1e-7

    def test_fourier_matches_bessel_evolution(self):
        basis = BasisDescriptor.fourier()
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 48)
        f = SequenceData.delta(0)
        for t in (0.5, 3.0):
            out = evolve_ivp(gen, f, t, method="band_expm")
            for i, n in enumerate(out.support):
                if abs(int(n)) <= 24:
                    assert out.values[i] == pytest.approx(bessel_series(int(n), t), abs=1e-9)

    def test_ivp_residual(self, rng):
        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        gen = build_generator(basis, sym, 64)
        f = SequenceData(support=np.arange(5), values=rng.standard_normal(5))
        h, t = 1e-4, 0.7
        up = evolve_ivp(gen, f, t + h).values
        um = evolve_ivp(gen, f, t - h).values
        mid = evolve_ivp(gen, f, t).values
        du = (up - um) / (2 * h)
        au = gen.generator_matrix() @ mid
        inner = np.abs(gen.indices) <= 32
        assert np.max(np.abs((du - au)[inner])) <= 1e-4

    def test_unknown_method(self):
        basis = BasisDescriptor.classical(0.0, 0.0)
        gen = build_generator(basis, SymbolSpec.from_coeffs([0, 1]), 8)
        with pytest.raises(ValueError):
            evolve_ivp(gen, SequenceData.delta(0), 1.0, method="magic")


class TestOrderStudy:
    def test_kernel_insensitive_to_extra_order(self, xsys):
        from specsemi.exceptional import exceptional_kernel
        from specsemi.jacobi import build_quadrature

        basis = BasisDescriptor.classical(0.0, 0.0)
        sym = SymbolSpec.from_coeffs([0, 1])
        n = 24
        base = build_kernel(basis, sym, 1.0, n, quad=build_quadrature(0, 0, 2 * n + 64))
        rich = build_kernel(basis, sym, 1.0, n, quad=build_quadrature(0, 0, 2 * n + 128))
        assert np.max(np.abs(base.entries - rich.entries)) <= 1e-12

        xa = exceptional_kernel(xsys, 1.0, n, order=2 * n + 64)
        xb = exceptional_kernel(xsys, 1.0, n, order=2 * n + 128)
        assert np.max(np.abs(xa.entries - xb.entries)) <= 1e-12
