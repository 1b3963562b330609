"""Polynomials on the reference slab [0, 1].

Monomials s**i are the storage basis.  The Gram matrix of the monomials is the
Hilbert matrix ``A[i, j] = 1/(i+j+1)``; its inverse has integer entries given
by a closed binomial formula, which we evaluate in exact integer arithmetic.
The dual basis psi_i (``int_0^1 psi_i s**j ds = delta_ij``) has the rows of
``A^{-1}`` as monomial coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, sqrt

import numpy as np

from .errors import ConditioningError

Q_MAX = 12


def _guard(q) -> int:
    if int(q) != q or q < 0:
        raise ConditioningError(f"degree must be a nonnegative integer, got {q!r}")
    if q > Q_MAX:
        raise ConditioningError(f"degree {q} exceeds the supported maximum {Q_MAX}")
    return int(q)


def hilbert_gram(q: int) -> np.ndarray:
    """(q+1)x(q+1) Gram matrix of 1, s, ..., s**q on [0, 1]."""
    q = _guard(q)
    i = np.arange(q + 1)
    return 1.0 / (i[:, None] + i[None, :] + 1.0)


def hilbert_gram_exact(q: int) -> list[list[Fraction]]:
    q = _guard(q)
    return [[Fraction(1, i + j + 1) for j in range(q + 1)] for i in range(q + 1)]


@lru_cache(maxsize=None)
def _inverse_entries(q: int) -> tuple:
    rows = []
    for i in range(q + 1):
        row = []
        for j in range(q + 1):
            acc = 0
            for k in range(max(i, j), q + 1):
                acc += (2 * k + 1) * comb(k, i) * comb(k + i, i) * comb(k, j) * comb(k + j, j)
            row.append(-acc if (i + j) % 2 else acc)
        rows.append(tuple(row))
    return tuple(rows)


def gram_inverse_exact(q: int) -> list[list[int]]:
    """Integer entries of the inverse Hilbert matrix as Python ints."""
    q = _guard(q)
    return [list(r) for r in _inverse_entries(q)]


def gram_inverse_formula(q: int) -> np.ndarray:
    """Inverse of :func:`hilbert_gram` from the closed binomial formula (int64).

    >>> gram_inverse_formula(1).tolist()
    [[4, -6], [-6, 12]]
    """
    q = _guard(q)
    # entries stay below 2**63 for q <= 12, checked when converting
    return np.array(_inverse_entries(q), dtype=np.int64)


def legendre_shifted(q: int) -> np.ndarray:
    """Monomial coefficients of orthonormal shifted Legendre polynomials.

    Column k holds P_k: ``P[i, k]`` is the coefficient of x**i, equal to
    ``(-1)**(k-i) sqrt(2k+1) C(k, i) C(k+i, i)``.  Then ``A^{-1} = P P^T``.
    """
    q = _guard(q)
    P = np.zeros((q + 1, q + 1))
    for k in range(q + 1):
        for i in range(k + 1):
            P[i, k] = (-1) ** (k - i) * sqrt(2 * k + 1) * comb(k, i) * comb(k + i, i)
    return P


@dataclass(frozen=True)
class PsiBasis:
    q: int
    coeffs: np.ndarray  # row i: monomial coefficients of psi_i

    @property
    def psi_q0(self) -> int:
        """Constant coefficient of psi_q."""
        return int(round(self.coeffs[self.q, 0]))

    def __call__(self, i: int, s):
        return poly_eval(self.coeffs[i], s)


@lru_cache(maxsize=None)
def psi_basis(q: int) -> PsiBasis:
    q = _guard(q)
    c = gram_inverse_formula(q).astype(float)
    c.setflags(write=False)
    return PsiBasis(q, c)


def poly_eval(coeffs, s):
    """Horner evaluation of sum_i coeffs[i] s**i (s may be an array)."""
    c = np.asarray(coeffs, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s) + (c[-1] if c.size else 0.0)
    for a in c[-2::-1]:
        out = out * s + a
    return out if out.ndim else float(out)


def derivative_table(q: int) -> np.ndarray:
    """``D[j, i] = int_0^1 (d/ds s**i) s**j ds = i/(i+j)`` (zero for i = 0)."""
    q = _guard(q)
    i = np.arange(q + 1)[None, :]
    j = np.arange(q + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(i > 0, i / np.maximum(i + j, 1), 0.0)
    return D.astype(float)


def moment_table(q: int, weights_fn=None, n_points: int | None = None) -> np.ndarray:
    """``C[j, i] = int_0^1 c(s) s**(i+j) ds``; exact Hilbert matrix when c = 1."""
    if weights_fn is None:
        return hilbert_gram(q)
    from .triple import gauss_legendre01

    s, w = gauss_legendre01(n_points or q + 2)
    cw = w * np.asarray(weights_fn(s), dtype=float)
    V = s[None, :] ** np.arange(q + 1)[:, None]
    return (V * cw) @ V.T
