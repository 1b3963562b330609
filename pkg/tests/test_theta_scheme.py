import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_theta_solution, random_triple
from spacetime_bnb.errors import ConstructionError, SingularSchemeError
from spacetime_bnb.grid import TimeGrid
from spacetime_bnb.norms import hat_derivative_vprime_norm, h_derivative_norm
from spacetime_bnb.theta_scheme import (ThetaSolution, assemble_theta_system, average_form, discrete_derivative,
                                        plateaus, reconstruct, solve_theta, theta_energy_terms)
from spacetime_bnb.triple import make_contraction, make_form, make_p1_fem_triple, make_spectral_triple


def scalar_setup(lam=1.0, M=None):
    t = make_spectral_triple(1, [lam])
    return t, make_form(t, alpha=1.0, M=M or 1.0)


class TestAverages:
    def test_constant_form(self):
        t = make_spectral_triple(3, [1, 4, 9])
        sd = average_form(make_form(t), t, TimeGrid(2.0, 5))
        assert all(np.array_equal(sd.A_m[0], A) for A in sd.A_m)
        assert sd.constant

    def test_linear_load(self):
        t, form = scalar_setup()
        sd = average_form(form, t, TimeGrid(1.0, 2), f=lambda s: np.array([s]))
        assert sd.f_m[:, 0] == pytest.approx([0.25, 0.75], abs=1e-15)

    def test_cosine_coefficient(self):
        t = make_spectral_triple(2, [1, 4])
        T, N = 2.0, 5
        form = make_form(t, coefficient=lambda s: 1 + 0.5 * np.cos(2 * np.pi * s / T),
                         coefficient_bounds=(0.5, 1.5), alpha=0.5, M=1.5)
        grid = TimeGrid(T, N)
        sd = average_form(form, t, grid)
        k = grid.k
        for m in range(N):
            a, b = m * k, (m + 1) * k
            cbar = 1 + 0.5 * T / (2 * np.pi) * (np.sin(2 * np.pi * b / T) - np.sin(2 * np.pi * a / T)) / k
            assert sd.A_m[m] == pytest.approx(cbar * t.gram_U, abs=1e-12)


class TestSolve:
    def test_zero_data(self):
        t = make_p1_fem_triple(6)
        grid = TimeGrid(1.0, 4)
        sol = solve_theta(average_form(make_form(t), t, grid), 0.5, make_contraction("zero", t),
                          np.zeros(t.dim), t, grid)
        assert not sol.w.any()

    def test_singular_example(self):
        t = make_spectral_triple(1, [1])
        form = make_form(t, matrix=[[2.0]], alpha=2.0, M=2.0)
        grid = TimeGrid(1.0, 1)
        with pytest.raises(SingularSchemeError):
            solve_theta(average_form(form, t, grid), 0.0, make_contraction("neg-identity", t), [1.0], t, grid)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 1.0])
    def test_scalar_recurrence(self, theta):
        lam, T, N = 3.0, 1.0, 7
        t = make_spectral_triple(1, [1.0])
        form = make_form(t, matrix=[[lam]], alpha=lam, M=lam)
        grid = TimeGrid(T, N)
        k = grid.k
        sol = solve_theta(average_form(form, t, grid), theta, make_contraction("zero", t), [2.0], t, grid)
        r = (1 - (1 - theta) * k * lam) / (1 + theta * k * lam)
        assert sol.w[:, 0] == pytest.approx(2.0 * r ** np.arange(N + 1), rel=1e-12)

    @pytest.mark.parametrize("theta", [0.5, 1.0])
    def test_march_equals_global(self, theta, rng):
        t = random_triple(rng, 4)
        form = make_form(t)
        grid = TimeGrid(1.5, 9)
        sd = average_form(form, t, grid, f=lambda s: np.sin(s) * np.arange(1, 5))
        xi = rng.standard_normal(4)
        phi = make_contraction("zero", t)
        a = solve_theta(sd, theta, phi, xi, t, grid, method="march")
        b = solve_theta(sd, theta, phi, xi, t, grid, method="global")
        assert np.abs(a.w - b.w).max() <= 1e-10 * max(1.0, np.abs(a.w).max())

    def test_march_needs_zero_phi(self):
        t, form = scalar_setup()
        grid = TimeGrid(1.0, 2)
        with pytest.raises(ConstructionError):
            solve_theta(average_form(form, t, grid), 1.0, make_contraction("identity", t), [1.0], t, grid,
                        method="march")

    def test_coupling_row_first(self):
        t, form = scalar_setup()
        grid = TimeGrid(1.0, 3)
        S, b = assemble_theta_system(average_form(form, t, grid), 1.0, make_contraction("scalar:0.5", t),
                                     [1.0], t, grid)
        row = S.toarray()[0]
        assert row.tolist() == [1.0, 0.0, 0.0, -0.5]
        assert b[0] == 1.0

    def test_periodic_solution_satisfies_coupling(self):
        t = make_spectral_triple(3, [1, 4, 9])
        grid = TimeGrid(1.0, 16)
        sd = average_form(make_form(t), t, grid, f=lambda s: np.array([np.cos(2 * np.pi * s), 0.0, 1.0]))
        sol = solve_theta(sd, 1.0, make_contraction("identity", t), np.zeros(3), t, grid)
        assert sol.w[0] == pytest.approx(sol.w[-1], abs=1e-12)
        assert sol.residual <= 1e-12

    def test_bad_theta(self):
        with pytest.raises(ConstructionError):
            ThetaSolution(1.2, TimeGrid(1.0, 1), np.zeros((2, 1)))


class TestReconstruct:
    def test_theta_one_interior(self):
        w = np.arange(4.0)[:, None]
        sol = ThetaSolution(1.0, TimeGrid(3.0, 3), w)
        assert reconstruct(sol, 1.5)[0] == 2.0

    def test_theta_zero_node(self):
        sol = ThetaSolution(0.0, TimeGrid(3.0, 3), np.arange(4.0)[:, None])
        assert reconstruct(sol, 1.0)[0] == 1.0
        assert reconstruct(sol, 3.0)[0] == 3.0

    def test_alternating(self):
        v = np.array([1.0, -2.0])
        w = np.array([(-1) ** m * v for m in range(5)])
        sol = ThetaSolution(0.5, TimeGrid(1.0, 4), w)
        assert not plateaus(sol).any()
        assert reconstruct(sol, 0.5) == pytest.approx(v)
        assert reconstruct(sol, 0.6) == pytest.approx(np.zeros(2))

    def test_outside(self):
        sol = ThetaSolution(0.0, TimeGrid(1.0, 2), np.zeros((3, 1)))
        with pytest.raises(ConstructionError):
            reconstruct(sol, 1.5)


class TestDerivative:
    def test_constant(self):
        sol = ThetaSolution(0.5, TimeGrid(1.0, 3), np.ones((4, 2)))
        assert not discrete_derivative(sol).any()

    def test_ramp(self):
        grid = TimeGrid(2.0, 4)
        v = np.array([3.0, -1.0])
        sol = ThetaSolution(1.0, grid, grid.nodes[:, None] * v)
        assert discrete_derivative(sol) == pytest.approx(np.tile(v, (4, 1)))

    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
    def test_telescoping(self, seed, N):
        rng = np.random.default_rng(seed)
        t = make_spectral_triple(3, [1, 4, 9])
        sol = random_theta_solution(rng, t, N, 0.5, T=2.0)
        total = sol.grid.k * discrete_derivative(sol).sum(axis=0)
        assert total == pytest.approx(sol.w[-1] - sol.w[0], abs=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 1), st.integers(1, 10))
def test_energy_identity(seed, theta, N):
    rng = np.random.default_rng(seed)
    t = random_triple(rng, 3)
    sol = random_theta_solution(rng, t, N, theta)
    lhs, rhs = theta_energy_terms(sol, t)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8))
def test_inverse_inequality_in_time(seed, N):
    # |d|_H <= mu_n |d|_{U'} for d in U_n, slab by slab
    rng = np.random.default_rng(seed)
    t = random_triple(rng, 4)
    sol = random_theta_solution(rng, t, N, 1.0)
    full = h_derivative_norm(sol, t)
    dual = hat_derivative_vprime_norm(sol, t)
    assert full <= t.mu_n * dual * (1 + 1e-10)
