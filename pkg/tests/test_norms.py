import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_dg_solution, random_theta_solution, random_triple, span_vprime_sup
from spacetime_bnb.dg_scheme import DgSolution, assemble_dg_system, solve_dg
from spacetime_bnb.grid import TimeGrid
from spacetime_bnb.norms import (ModalFunction, NormBundle, delta_n, error_bundle, hat_derivative_vprime_norm,
                                 interpolate_dg, interpolate_theta, norm_bundle, sup_h_norm, surrogate_gram,
                                 v_norm)
from spacetime_bnb.theta_scheme import ThetaSolution, average_form, solve_theta
from spacetime_bnb.triple import make_contraction, make_form, make_p1_fem_triple, make_spectral_triple


def exp_mode(lam=1.0, order=4, index=0, size=1):
    def deriv(i):
        def f(t):
            c = np.zeros(size)
            c[index] = (-lam) ** i * math.exp(-lam * t)
            return c
        return f
    return ModalFunction([deriv(i) for i in range(order + 1)], label="exp")


def fit_rate(errs):
    return min(math.log2(a / b) for a, b in zip(errs, errs[1:]))


class TestVNorm:
    def test_zero(self):
        t = make_spectral_triple(2, [1, 4])
        assert v_norm(ThetaSolution(1.0, TimeGrid(1.0, 3), np.zeros((4, 2))), t) == 0.0

    def test_constant(self):
        t = make_spectral_triple(2, [1, 4])
        v = np.array([1.0, 2.0])
        sol = ThetaSolution(1.0, TimeGrid(2.0, 5), np.tile(v, (6, 1)))
        assert v_norm(sol, t) == pytest.approx(math.sqrt(2.0) * t.u_norm(v), rel=1e-14)

    def test_dg_linear(self):
        t = make_spectral_triple(2, [1, 4])
        v = np.array([1.0, -1.0])
        grid = TimeGrid(0.5, 1)
        sol = DgSolution(1, grid, np.zeros(2), np.array([[np.zeros(2), v]]))
        assert v_norm(sol, t) == pytest.approx(math.sqrt(grid.k / 3) * t.u_norm(v), rel=1e-14)


class TestVPrime:
    def test_constant_zero(self):
        t = make_spectral_triple(2, [1, 4])
        assert hat_derivative_vprime_norm(ThetaSolution(0.5, TimeGrid(1.0, 3), np.ones((4, 2))), t) == 0.0

    def test_single_mode(self):
        lam, d, T = 4.0, 0.7, 2.0
        t = make_spectral_triple(1, [lam])
        grid = TimeGrid(T, 5)
        sol = ThetaSolution(1.0, grid, (d * grid.nodes)[:, None])
        assert hat_derivative_vprime_norm(sol, t) == pytest.approx(math.sqrt(T) * d / math.sqrt(lam), rel=1e-13)

    def test_dg0_equals_theta(self, rng):
        t = random_triple(rng, 3)
        dg = random_dg_solution(rng, t, 5, 0)
        th = ThetaSolution(1.0, dg.grid, dg.nodal_values())
        assert hat_derivative_vprime_norm(dg, t) == pytest.approx(hat_derivative_vprime_norm(th, t), rel=1e-12)
        assert v_norm(dg, t) == pytest.approx(v_norm(th, t), rel=1e-12)

    @settings(max_examples=30)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3), st.integers(1, 4))
    def test_equals_sup_over_random_basis(self, seed, q, N):
        rng = np.random.default_rng(seed)
        t = random_triple(rng, 3)
        sol = random_dg_solution(rng, t, N, q)
        assert hat_derivative_vprime_norm(sol, t) == pytest.approx(span_vprime_sup(sol, t, rng), rel=1e-8)


class TestSupH:
    def test_constant(self):
        t = make_p1_fem_triple(4)
        v = np.array([1.0, 2.0, 3.0])
        assert sup_h_norm(ThetaSolution(0.0, TimeGrid(1.0, 3), np.tile(v, (4, 1))), t) == \
            pytest.approx(t.h_norm(v), rel=1e-14)

    def test_alternating(self):
        t = make_spectral_triple(2, [1, 4])
        grid = TimeGrid(1.0, 4)
        v = np.array([0.6, 0.8])
        w = np.array([(-1) ** m * grid.k * v for m in range(5)])
        assert sup_h_norm(ThetaSolution(0.5, grid, w), t) == pytest.approx(grid.k, rel=1e-14)

    def test_dg_monotone_slab(self):
        t = make_spectral_triple(1, [1])
        sol = DgSolution(1, TimeGrid(1.0, 1), [0.0], np.array([[[2.0], [-2.0]]]))
        assert sup_h_norm(sol, t) == pytest.approx(2.0)

    def test_dg_interior_max(self):
        # w(s) = 4 s (1 - s) peaks at s = 1/2 with value 1
        t = make_spectral_triple(1, [1])
        sol = DgSolution(2, TimeGrid(1.0, 1), [0.0], np.array([[[0.0], [4.0], [-4.0]]]))
        assert sup_h_norm(sol, t) == pytest.approx(1.0, rel=1e-12)

    @settings(max_examples=30)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(0, 4))
    def test_dense_sampling_never_exceeds(self, seed, q):
        rng = np.random.default_rng(seed)
        t = random_triple(rng, 2)
        sol = random_dg_solution(rng, t, 2, q)
        s = np.linspace(0, 1, 2001)
        vals = np.einsum("pi,min->mpn", s[:, None] ** np.arange(q + 1), sol.slabs)
        pts = np.vstack([sol.w0[None], vals.reshape(-1, 2)])  # w(0) is part of the function
        sampled = max(math.sqrt(float(v @ t.gram_H @ v)) for v in pts)
        exact = sup_h_norm(sol, t)
        assert sampled <= exact * (1 + 1e-9)
        assert sampled >= exact * (1 - 1e-5)


class TestBundle:
    @settings(max_examples=30)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.5, 1.0), st.integers(1, 8))
    def test_theta_sup_bound(self, seed, theta, N):
        rng = np.random.default_rng(seed)
        t = random_triple(rng, 3)
        sol = random_theta_solution(rng, t, N, theta)
        b = norm_bundle(sol, t)
        assert b.sup_h <= b.z_surrogate + 1e-10
        assert b.sup_h >= max(b.trace0, b.traceT) - 1e-12

    def test_traces(self, rng):
        t = random_triple(rng, 3)
        sol = random_theta_solution(rng, t, 4, 1.0)
        b = norm_bundle(sol, t)
        assert b.trace0 == pytest.approx(t.h_norm(sol.w[0]), abs=1e-12)
        assert b.traceT == pytest.approx(t.h_norm(sol.w[-1]), abs=1e-12)

    def test_surrogate_gram_quadratic_form(self, rng):
        t = random_triple(rng, 3)
        for sol in (random_theta_solution(rng, t, 4, 0.3), random_dg_solution(rng, t, 3, 2)):
            c = sol.coefficients
            b = norm_bundle(sol, t)
            assert c @ surrogate_gram(sol, t) @ c == pytest.approx(b.z_surrogate ** 2, rel=1e-10)

    def test_row(self):
        b = NormBundle(3.0, 4.0, 1.0, 0.0, 0.0)
        assert b.to_row()["z_surrogate"] == 5.0


class TestInterpolation:
    def test_theta_in_space(self):
        t = make_spectral_triple(2, [1, 4])
        u = ModalFunction([lambda s: np.array([s, 2.0])])
        grid = TimeGrid(1.0, 4)
        w = interpolate_theta(u, t, grid, 1.0).w
        assert w == pytest.approx(np.column_stack([grid.nodes, np.full(5, 2.0)]), abs=1e-15)

    def test_theta_order(self):
        t = make_spectral_triple(1, [1])
        u = exp_mode()
        errs = [error_bundle(u, interpolate_theta(u, t, TimeGrid(1.0, N), 1.0), t).v_norm for N in (8, 16, 32)]
        assert fit_rate(errs) >= 0.9

    def test_dg_reproduces_polynomials(self):
        t = make_spectral_triple(2, [1, 4])
        u = ModalFunction([lambda s: np.array([1 + s - s ** 2, 3 * s]), lambda s: np.array([1 - 2 * s, 3.0]),
                           lambda s: np.array([-2.0, 0.0])])
        grid = TimeGrid(1.0, 3)
        sol = interpolate_dg(u, t, grid, 2)
        assert error_bundle(u, sol, t).z_surrogate <= 1e-12

    def test_dg_q0_is_left_sampling(self):
        t = make_spectral_triple(1, [1])
        grid = TimeGrid(1.0, 4)
        sol = interpolate_dg(exp_mode(), t, grid, 0)
        assert sol.slabs[:, 0, 0] == pytest.approx(np.exp(-grid.nodes[:-1]))

    def test_dg_order(self):
        t = make_spectral_triple(1, [1])
        u = exp_mode()
        errs = [error_bundle(u, interpolate_dg(u, t, TimeGrid(1.0, N), 1), t).v_norm for N in (8, 16, 32)]
        assert fit_rate(errs) >= 1.9


class TestDeltaN:
    def test_in_space(self):
        t = make_spectral_triple(2, [1, 4])
        assert delta_n(exp_mode(size=2), t, TimeGrid(1.0, 3)) == 0.0

    def test_tail(self):
        t = make_spectral_triple(1, [1])
        T = 2.0
        u = ModalFunction([lambda s: np.array([0.0, 1.5])], eigenvalues=[1.0, 4.0])
        assert delta_n(u, t, TimeGrid(T, 4)) == pytest.approx(math.sqrt(T) * 1.5 * 2.0, rel=1e-13)

    def test_p1_first_order(self):
        from spacetime_bnb.norms import SineSeriesFunction
        u = SineSeriesFunction([lambda s: np.array([math.exp(-s), 0.5])], 1.0)
        vals = [delta_n(u, make_p1_fem_triple(n), TimeGrid(1.0, 2)) for n in (8, 16, 32)]
        rates = [a / b for a, b in zip(vals, vals[1:])]
        assert all(r == pytest.approx(2.0, rel=0.1) for r in rates)


class TestErrorBundle:
    def test_self_distance(self, rng):
        t = make_spectral_triple(3, [1, 4, 9])
        sol = random_dg_solution(rng, t, 4, 2)
        grid = sol.grid

        def piece(order):
            def f(s):
                m, x, node = grid.locate(s)
                C = sol.slabs[m]
                if s == 0.0 and order == 0:
                    return sol.w0.copy()
                coeffs = [math.factorial(i) / math.factorial(i - order) * x ** (i - order) / grid.k ** order
                          for i in range(order, 3)]
                return sum(c * C[i] for c, i in zip(coeffs, range(order, 3)))
            return f

        # only compare V and the time-interior part: the function is smooth inside slabs
        u = ModalFunction([piece(0), piece(1)], label="self")
        b = error_bundle(u, sol, t)
        assert b.v_norm <= 1e-10

    def test_decay_refinement(self):
        t = make_spectral_triple(4, [1, 4, 9, 16])
        u = exp_mode(size=4)
        prev = None
        for N in (4, 8, 16):
            grid = TimeGrid(1.0, N)
            sd = average_form(make_form(t), t, grid)
            sol = solve_theta(sd, 1.0, make_contraction("zero", t), np.eye(4)[0], t, grid)
            b = error_bundle(u, sol, t)
            row = np.array([b.vprime_deriv, b.v_norm, b.sup_h])
            if prev is not None:
                assert np.all(row < prev)
            prev = row

    def test_dg0_vprime_matches_theta(self):
        t = make_spectral_triple(2, [1, 4])
        u = exp_mode(size=2)
        grid = TimeGrid(1.0, 8)
        sys = assemble_dg_system(make_form(t), 0, make_contraction("zero", t), np.eye(2)[0], None, t, grid)
        dg = solve_dg(sys)
        th = ThetaSolution(1.0, grid, dg.nodal_values())
        a, b = error_bundle(u, dg, t), error_bundle(u, th, t)
        assert a.vprime_deriv == pytest.approx(b.vprime_deriv, rel=1e-10)
        assert a.v_norm == pytest.approx(b.v_norm, rel=1e-10)
        assert "time_quadrature" in a.meta
