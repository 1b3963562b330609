from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacetime_bnb.errors import ConditioningError
from spacetime_bnb.timepoly import (derivative_table, gram_inverse_exact, gram_inverse_formula, hilbert_gram,
                                    hilbert_gram_exact, legendre_shifted, moment_table, poly_eval, psi_basis)
from spacetime_bnb.triple import gauss_legendre01


def test_hilbert_small():
    assert hilbert_gram(0).tolist() == [[1.0]]
    assert hilbert_gram(1) == pytest.approx(np.array([[1, 1 / 2], [1 / 2, 1 / 3]]))
    assert hilbert_gram(2) == pytest.approx(np.array([[1, 1 / 2, 1 / 3], [1 / 2, 1 / 3, 1 / 4],
                                                      [1 / 3, 1 / 4, 1 / 5]]))


def test_hilbert_matches_quadrature():
    x, w = gauss_legendre01(8)
    V = x[None, :] ** np.arange(5)[:, None]
    assert (V * w) @ V.T == pytest.approx(hilbert_gram(4), abs=1e-14)


def test_inverse_small():
    assert gram_inverse_formula(0).tolist() == [[1]]
    assert gram_inverse_formula(1).tolist() == [[4, -6], [-6, 12]]
    assert np.linalg.inv(hilbert_gram(1)) == pytest.approx(np.array([[4, -6], [-6, 12]]))


@pytest.mark.parametrize("q", range(13))
def test_inverse_exact_rational(q):
    H = hilbert_gram_exact(q)
    Inv = gram_inverse_exact(q)
    n = q + 1
    for i in range(n):
        for j in range(n):
            assert sum(H[i][l] * Inv[l][j] for l in range(n)) == Fraction(int(i == j))


@pytest.mark.parametrize("q", range(5))
def test_inverse_float_product(q):
    # well conditioned range; q >= 6 is limited by cond(H) * eps
    P = gram_inverse_formula(q).astype(float) @ hilbert_gram(q)
    assert np.abs(P - np.eye(q + 1)).max() <= 1e-9


def test_degree_guard():
    for bad in (-1, 1.5, 13):
        with pytest.raises(ConditioningError):
            hilbert_gram(bad)


def test_legendre_low():
    P = legendre_shifted(1)
    assert P[:, 0] == pytest.approx([1.0, 0.0])
    assert P[:, 1] == pytest.approx(np.sqrt(3) * np.array([-1.0, 2.0]))


def test_legendre_orthonormal():
    P = legendre_shifted(4)
    x, w = gauss_legendre01(10)
    vals = np.stack([poly_eval(P[:, k], x) for k in range(5)])
    assert (vals * w) @ vals.T == pytest.approx(np.eye(5), abs=1e-10)


@pytest.mark.parametrize("q", range(7))
def test_inverse_is_ppt(q):
    P = legendre_shifted(q)
    inv = gram_inverse_formula(q).astype(float)
    assert np.abs(P @ P.T - inv).max() <= 1e-9 * np.abs(inv).max()


def test_psi_low():
    assert psi_basis(0).coeffs.tolist() == [[1.0]]
    b = psi_basis(1)
    assert b(0, 0.5) == pytest.approx(1.0)
    assert b.coeffs.tolist() == [[4.0, -6.0], [-6.0, 12.0]]


@pytest.mark.parametrize("q", range(6))
def test_psi_duality(q):
    b = psi_basis(q)
    x, w = gauss_legendre01(q + 3)
    M = np.array([[np.sum(w * b(i, x) * x ** j) for j in range(q + 1)] for i in range(q + 1)])
    assert M == pytest.approx(np.eye(q + 1), abs=1e-10)


@pytest.mark.parametrize("q", range(13))
def test_psi_q0_nonzero(q):
    assert psi_basis(q).psi_q0 != 0


def test_poly_eval_examples():
    assert poly_eval([1], 0.7) == 1.0
    assert poly_eval([0, 1], 0.5) == 0.5
    assert poly_eval([4, -6], 0.5) == 1.0
    assert poly_eval([1, 2, 3], np.array([0.0, 1.0])).tolist() == [1.0, 6.0]


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=6), st.floats(0, 1))
def test_poly_eval_matches_numpy(coeffs, s):
    assert poly_eval(coeffs, s) == pytest.approx(np.polynomial.polynomial.polyval(s, coeffs), abs=1e-9)


def test_derivative_table():
    D = derivative_table(2)
    expect = [[0, 1, 1], [0, 1 / 2, 2 / 3], [0, 1 / 3, 2 / 4]]
    assert D == pytest.approx(np.array(expect))


def test_moment_table_weighted():
    C = moment_table(2, lambda s: 2 * s, n_points=6)
    i = np.arange(3)
    assert C == pytest.approx(2.0 / (i[:, None] + i[None, :] + 2.0), rel=1e-13)
    assert moment_table(3) is not None and moment_table(3) == pytest.approx(hilbert_gram(3))
