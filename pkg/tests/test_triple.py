import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_triple
from spacetime_bnb.errors import ConstructionError, ContractionViolation, RescaleInfeasible
from spacetime_bnb.triple import (SpaceTriple, embedding_constant, inverse_inequality_constant, make_contraction,
                                  make_form, make_gram_triple, make_p1_fem_triple, make_spectral_triple,
                                  p1_h_load, p1_prolongation, rescale_problem, riesz_dual_norm)


def p1_mu_exact(n, L=1.0):
    # eigenvalues of K v = mu^2 M v on a uniform mesh, closed form
    h = L / n
    j = np.arange(1, n)
    lam = 6.0 / h ** 2 * (1 - np.cos(j * np.pi * h / L)) / (2 + np.cos(j * np.pi * h / L))
    return math.sqrt(lam.max())


class TestSpectral:
    def test_one_mode(self):
        t = make_spectral_triple(1, [1])
        assert t.gram_U.tolist() == [[1.0]]
        assert t.gram_H.tolist() == [[1.0]]
        assert t.mu_n == 1.0 and t.c_h == 1.0

    def test_mu_n(self):
        t = make_spectral_triple(3, [1, 4, 9])
        assert np.array_equal(t.gram_U, np.diag([1.0, 4.0, 9.0]))
        assert t.mu_n == pytest.approx(3.0, rel=1e-14)

    def test_c_h(self):
        assert make_spectral_triple(2, [2, 2]).c_h == pytest.approx(1 / math.sqrt(2), rel=1e-14)
        assert embedding_constant(make_spectral_triple(1, [4])) == pytest.approx(0.5)

    def test_inverse_constant(self):
        assert inverse_inequality_constant(make_spectral_triple(1, [1])) == 1.0
        assert inverse_inequality_constant(make_spectral_triple(2, [1, 100])) == pytest.approx(10.0)

    @pytest.mark.parametrize("ev", [[0, 1], [1, -2], [4, 1], [1, np.inf]])
    def test_bad_eigenvalues(self, ev):
        with pytest.raises(ConstructionError):
            make_spectral_triple(2, ev)

    def test_wrong_count(self):
        with pytest.raises(ConstructionError):
            make_spectral_triple(3, [1, 2])

    def test_grams_read_only(self):
        t = make_spectral_triple(2, [1, 4])
        with pytest.raises(ValueError):
            t.gram_U[0, 0] = 5.0


class TestP1:
    def test_two_cells(self):
        t = make_p1_fem_triple(2, 1.0)
        assert t.gram_U == pytest.approx(np.array([[4.0]]))
        assert t.gram_H == pytest.approx(np.array([[1 / 3]]))

    def test_four_cells_against_eigensolve(self):
        t = make_p1_fem_triple(4, 1.0)
        ev = sla.eigh(t.gram_U, t.gram_H, eigvals_only=True)
        assert inverse_inequality_constant(t) == pytest.approx(math.sqrt(ev[-1]), rel=1e-10)
        assert t.mu_n == pytest.approx(p1_mu_exact(4), rel=1e-12)

    def test_mu_doubling(self):
        ns = (8, 16, 32)
        mus = [make_p1_fem_triple(n).mu_n for n in ns]
        ratios = [b / a for a, b in zip(mus, mus[1:])]
        assert ratios == pytest.approx([p1_mu_exact(2 * n) / p1_mu_exact(n) for n in ns[:-1]], rel=1e-10)
        # 1/h scaling, approached from above
        assert all(abs(r - 2.0) < 0.1 for r in ratios)
        assert abs(ratios[1] - 2.0) < abs(ratios[0] - 2.0)

    def test_chained_constants(self):
        t = make_p1_fem_triple(8)
        assert t.c_h * t.mu_n >= 1.0

    def test_c_h_tends_to_poincare(self):
        # smallest eigenvalue approaches pi^2, so C_H -> 1/pi from below
        assert make_p1_fem_triple(64).c_h == pytest.approx(1 / math.pi, rel=1e-3)

    def test_h_load_of_constant(self):
        t = make_p1_fem_triple(5, 2.0)
        load = p1_h_load(t, lambda x: np.ones_like(x))
        assert load == pytest.approx(np.full(4, 0.4))

    def test_prolongation_preserves_norms(self):
        c, f = make_p1_fem_triple(4), make_p1_fem_triple(8)
        P = p1_prolongation(c, f)
        x = np.random.default_rng(1).standard_normal(3)
        assert f.u_norm(P @ x) == pytest.approx(c.u_norm(x), rel=1e-12)
        assert f.h_norm(P @ x) == pytest.approx(c.h_norm(x), rel=1e-12)

    def test_too_few_cells(self):
        with pytest.raises(ConstructionError):
            make_p1_fem_triple(1)


class TestRiesz:
    def test_zero(self):
        assert riesz_dual_norm(make_spectral_triple(2, [1, 4]), [0, 0]) == 0.0

    def test_scalar(self):
        assert riesz_dual_norm(make_spectral_triple(1, [4]), [2.0]) == pytest.approx(1.0)

    def test_monte_carlo_sup(self, rng):
        t = random_triple(rng, 3)
        ell = rng.standard_normal(3)
        L = np.linalg.cholesky(t.gram_U)
        Z = rng.standard_normal((10_000, 3))
        U = sla.solve_triangular(L.T, Z.T, lower=False).T
        mc = np.max(np.abs(U @ ell) / np.linalg.norm(Z, axis=1))
        exact = riesz_dual_norm(t, ell)
        assert mc <= exact * (1 + 1e-12)
        assert mc >= 0.98 * exact

    def test_shape_check(self):
        with pytest.raises(ConstructionError):
            riesz_dual_norm(make_spectral_triple(2, [1, 4]), [1.0])


class TestContraction:
    def test_standard_kinds(self):
        t = make_p1_fem_triple(4)
        z = make_contraction("zero", t)
        assert z.certified_norm == 0.0 and not z.pairing_H.any()
        i = make_contraction("identity", t)
        assert i.certified_norm == 1.0 and np.array_equal(i.pairing_H, t.gram_H)
        a = make_contraction("scalar", t, scalar=-1.0)
        assert a.kind == "neg-identity" and a.certified_norm == 1.0

    def test_scalar_shorthand(self):
        t = make_spectral_triple(2, [1, 4])
        phi = make_contraction("scalar:0.5", t)
        assert phi.scalar == 0.5 and phi.descriptor() == "scalar:0.5"

    def test_custom_norm_in_h(self, rng):
        t = random_triple(rng, 4)
        LH = t.chol_H_lower
        C = rng.standard_normal((4, 4))
        C *= 0.9 / np.linalg.norm(C, 2)
        phi = make_contraction("custom", t, LH @ C @ LH.T)
        assert phi.certified_norm == pytest.approx(0.9, rel=1e-10)

    def test_violation(self):
        t = make_spectral_triple(2, [1, 4])
        with pytest.raises(ContractionViolation):
            make_contraction("scalar", t, scalar=1.5)
        with pytest.raises(ContractionViolation):
            make_contraction("custom", t, 2.0 * np.eye(2))

    def test_unknown_kind(self):
        with pytest.raises(ConstructionError):
            make_contraction("rotation", make_spectral_triple(1, [1]))


class TestForm:
    def test_default_is_u_product(self):
        t = make_p1_fem_triple(6)
        f = make_form(t)
        assert f.certified == pytest.approx((1.0, 1.0), rel=1e-10)

    def test_not_coercive(self):
        t = make_spectral_triple(2, [1, 4])
        with pytest.raises(ConstructionError):
            make_form(t, matrix=np.diag([0.5, 4.0]), alpha=1.0, M=1.0)

    def test_too_large(self):
        t = make_spectral_triple(2, [1, 4])
        with pytest.raises(ConstructionError):
            make_form(t, matrix=np.diag([1.0, 12.0]), alpha=1.0, M=2.0)

    def test_time_dependent(self):
        t = make_spectral_triple(2, [1, 4])
        f = make_form(t, coefficient=lambda s: 1 + 0.5 * np.cos(s), coefficient_bounds=(0.5, 1.5),
                      alpha=0.5, M=1.5)
        assert f.matrix_at(0.0) == pytest.approx(1.5 * t.gram_U)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_coercivity_on_random_vectors(self, seed):
        rng = np.random.default_rng(seed)
        t = random_triple(rng, 3)
        S = rng.standard_normal((3, 3))
        A = t.gram_U + 0.3 * (S - S.T)  # skew part leaves <Au,u> = |u|_U^2
        f = make_form(t, A, alpha=1.0, M=2.0)
        x = rng.standard_normal(3)
        assert x @ f.matrix @ x >= f.alpha * t.u_norm(x) ** 2 * (1 - 1e-10)
        y = rng.standard_normal(3)
        assert abs(y @ f.matrix @ x) <= f.M * t.u_norm(x) * t.u_norm(y) * (1 + 1e-10)


class TestRescale:
    def test_zero_lambda(self):
        t = make_spectral_triple(2, [1, 4])
        form, phi = make_form(t), make_contraction("identity", t)
        f2, p2, tr = rescale_problem(form, phi, 0.0, 1.0)
        assert f2 is form and p2 is phi and tr.lam == 0.0

    def test_half_becomes_identity(self):
        t = make_spectral_triple(2, [1, 4])
        T = 3.0
        _, phi, tr = rescale_problem(make_form(t), make_contraction("scalar", t, scalar=0.5),
                                     math.log(2) / T, T)
        assert phi.kind == "identity"
        assert tr.solution(T, np.ones(2)) == pytest.approx(2 * np.ones(2))

    def test_infeasible(self):
        t = make_spectral_triple(1, [1])
        with pytest.raises(RescaleInfeasible):
            rescale_problem(make_form(t), make_contraction("identity", t), 1.0, 1.0)

    def test_shifted_form_constants(self):
        t = make_spectral_triple(2, [1, 4])
        form, _, _ = rescale_problem(make_form(t), make_contraction("zero", t), 2.0, 1.0)
        assert form.shift == 2.0
        assert form.M == pytest.approx(1.0 + 2.0 * t.c_h ** 2)

    def test_data_round_trip(self):
        t = make_spectral_triple(1, [1])
        _, _, tr = rescale_problem(make_form(t), make_contraction("zero", t), 0.7, 1.0)
        f = tr.data_inverse(tr.data(lambda s: np.array([s + 1.0])))
        assert f(0.4) == pytest.approx([1.4])


class TestSerialization:
    @pytest.mark.parametrize("build", [
        lambda: make_spectral_triple(3, [1, 4, 9]),
        lambda: make_p1_fem_triple(5, 2.0),
        lambda: make_gram_triple(np.diag([2.0, 3.0]), np.eye(2)),
    ])
    def test_round_trip(self, build):
        t = build()
        back = SpaceTriple.from_dict(t.to_dict())
        assert np.array_equal(back.gram_U, t.gram_U)
        assert np.array_equal(back.gram_H, t.gram_H)
        assert back.kind == t.kind

    def test_not_spd(self):
        with pytest.raises(ConstructionError):
            make_gram_triple(np.diag([1.0, -1.0]), np.eye(2))
