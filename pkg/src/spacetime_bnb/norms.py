"""Norms, interpolants and error bundles for theta and dG discrete functions.

Notation: V = L2(0,T;U).  For a discrete function w the jump-corrected
derivative acts on V through the H pairing, and its V'-norm is computed with a
Riesz solve against gram_U:

* theta:  |dw|^2_{V'} = sum_m k (G_H d_m)^T G_U^{-1} (G_H d_m)
* dG(q):  |dw|^2_{V'} = sum_m k sum_ij A_ij (G_H D_i)^T G_U^{-1} (G_H D_j)

where A is the Hilbert matrix of the slab monomials.  Errors against exact
functions are evaluated in a reference space that contains both the discrete
space and (a projection of) the exact function, with composite Gauss
quadrature in time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .dg_scheme import DgSolution, corrected_derivative
from .errors import ConstructionError
from .grid import TimeGrid
from .theta_scheme import ThetaSolution, discrete_derivative, plateaus
from .timepoly import PsiBasis, hilbert_gram, psi_basis
from .triple import (P1FEM, SPECTRAL, SpaceTriple, gauss_legendre01, make_p1_fem_triple,
                     p1_h_load, p1_prolongation, p1_u_load)

Solution = Union[ThetaSolution, DgSolution]

ERROR_QUAD_POINTS = 31
DELTA_QUAD_POINTS = 9
REFERENCE_FACTOR = 4
_CHEB_SAMPLES = 64


# ---------------------------------------------------------------------------
# bundles

@dataclass(frozen=True)
class NormBundle:
    vprime_deriv: float
    v_norm: float
    sup_h: float
    trace0: float
    traceT: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def z_surrogate(self) -> float:
        return math.sqrt(self.vprime_deriv ** 2 + self.v_norm ** 2 + self.trace0 ** 2 + self.traceT ** 2)

    FIELDS = ("vprime_deriv", "v_norm", "sup_h", "trace0", "traceT", "z_surrogate")

    def to_row(self) -> dict:
        return {name: float(getattr(self, name)) for name in self.FIELDS}

    def to_dict(self) -> dict:
        d = self.to_row()
        d["meta"] = dict(self.meta)
        return d


def _k(sol) -> float:
    return sol.grid.k


def _is_theta(sol) -> bool:
    return isinstance(sol, ThetaSolution)


def _whitened(triple: SpaceTriple, X: np.ndarray) -> np.ndarray:
    """L_U^{-1} X for the lower Cholesky factor of gram_U (columns of X)."""
    return sla.solve_triangular(triple.chol_U_lower, X, lower=True)


# ---------------------------------------------------------------------------
# norms of discrete functions

def v_norm(sol: Solution, triple: SpaceTriple, grid: Optional[TimeGrid] = None) -> float:
    GU = triple.gram_U
    if _is_theta(sol):
        p = plateaus(sol)
        return math.sqrt(max(_k(sol) * float(np.einsum("ma,ab,mb->", p, GU, p)), 0.0))
    A = hilbert_gram(sol.q)
    val = _k(sol) * float(np.einsum("ij,mia,ab,mjb->", A, sol.slabs, GU, sol.slabs))
    return math.sqrt(max(val, 0.0))


def derivative_coefficients(sol: Solution, psi: Optional[PsiBasis] = None) -> np.ndarray:
    """Slab coefficients of the corrected derivative, shape (N, q+1, n) (q = 0 for theta)."""
    if _is_theta(sol):
        return discrete_derivative(sol)[:, None, :]
    return corrected_derivative(sol, psi)


def hat_derivative_vprime_norm(sol: Solution, triple: SpaceTriple, grid: Optional[TimeGrid] = None,
                               psi: Optional[PsiBasis] = None) -> float:
    """V'-norm of the jump-corrected derivative, via Riesz solves."""
    D = derivative_coefficients(sol, psi)
    N, nb, n = D.shape
    A = hilbert_gram(nb - 1)
    # Y[m, i] = L_U^{-1} G_H D_i, so (G_H D_i)^T G_U^{-1} (G_H D_j) = Y_i . Y_j
    Y = _whitened(triple, triple.gram_H @ D.reshape(-1, n).T).T.reshape(N, nb, n)
    val = _k(sol) * float(np.einsum("ij,mia,mja->", A, Y, Y))
    return math.sqrt(max(val, 0.0))


def h_pairing_derivative(sol: Solution, triple: SpaceTriple, psi: Optional[PsiBasis] = None) -> float:
    """int <dw, w>_H over (0, T) (the duality pairing since w lies in V_n)."""
    GH = triple.gram_H
    if _is_theta(sol):
        return _k(sol) * float(np.einsum("ma,ab,mb->", discrete_derivative(sol), GH, plateaus(sol)))
    A = hilbert_gram(sol.q)
    D = corrected_derivative(sol, psi)
    return _k(sol) * float(np.einsum("ij,mia,ab,mjb->", A, D, GH, sol.slabs))


def h_derivative_norm(sol: Solution, triple: SpaceTriple, psi: Optional[PsiBasis] = None) -> float:
    """||dw||_{L2(0,T;H)}."""
    GH = triple.gram_H
    D = derivative_coefficients(sol, psi)
    A = hilbert_gram(D.shape[1] - 1)
    return math.sqrt(max(_k(sol) * float(np.einsum("ij,mia,ab,mjb->", A, D, GH, D)), 0.0))


def _sq_h_poly_max(C: np.ndarray, GH: np.ndarray, q: int) -> float:
    """max over s in [0,1] of |sum_i s**i C_i|_H^2."""
    # coefficients of the degree-2q polynomial p(s) = sum_{ij} s^{i+j} C_i^T G_H C_j
    G = C @ GH @ C.T
    p = np.zeros(2 * q + 1)
    for i in range(q + 1):
        for j in range(q + 1):
            p[i + j] += G[i, j]
    cand = [0.0, 1.0]
    if q >= 1:
        dp = np.polynomial.polynomial.polyder(p)
        try:
            r = np.polynomial.polynomial.polyroots(dp)
            cand.extend(float(x.real) for x in r if abs(x.imag) <= 1e-9 and 0.0 < x.real < 1.0)
        except np.linalg.LinAlgError:
            pass
        if q >= 3:
            cand.extend(0.5 - 0.5 * np.cos(np.pi * (np.arange(_CHEB_SAMPLES) + 0.5) / _CHEB_SAMPLES))
    vals = np.polynomial.polynomial.polyval(np.asarray(cand), p)
    return float(np.max(vals))


def sup_h_norm(sol: Solution, triple: SpaceTriple) -> float:
    """sup over [0,T] of ||w(t)||_H (exact for theta and for dG with q <= 2)."""
    GH = triple.gram_H
    if _is_theta(sol):
        vals = np.vstack([sol.w, plateaus(sol)])
        return math.sqrt(max(float(np.max(np.einsum("pa,ab,pb->p", vals, GH, vals))), 0.0))
    best = float(sol.w0 @ GH @ sol.w0)
    for m in range(sol.grid.N):
        best = max(best, _sq_h_poly_max(sol.slabs[m], GH, sol.q))
    return math.sqrt(max(best, 0.0))


def norm_bundle(sol: Solution, triple: SpaceTriple, psi: Optional[PsiBasis] = None) -> NormBundle:
    sup_tol = 0.0 if _is_theta(sol) or sol.q <= 2 else 1e-6
    return NormBundle(hat_derivative_vprime_norm(sol, triple, psi=psi), v_norm(sol, triple),
                      sup_h_norm(sol, triple), triple.h_norm(sol.start), triple.h_norm(sol.end),
                      {"kind": "norms", "sup_relative_slack": sup_tol})


# ---------------------------------------------------------------------------
# linear maps from W_n coefficients

@dataclass(frozen=True, eq=False)
class CoefficientOperators:
    """Dense matrices acting on the W_n coefficient vector.

    ``deriv``/``value`` map to the stacked slab coefficients (N*(q+1)*n) of the
    corrected derivative and of the function (theta: plateaus, q = 0).
    """

    deriv: np.ndarray
    value: np.ndarray
    start: np.ndarray
    end: np.ndarray
    q: int
    n: int
    N: int


def coefficient_operators(sol: Solution) -> CoefficientOperators:
    n, N = sol.dim, sol.grid.N
    k = sol.grid.k
    if _is_theta(sol):
        th = sol.theta
        size = (N + 1) * n
        I = np.eye(n)
        deriv = np.zeros((N * n, size))
        value = np.zeros((N * n, size))
        for m in range(N):
            r = slice(m * n, (m + 1) * n)
            deriv[r, m * n:(m + 1) * n] = -I / k
            deriv[r, (m + 1) * n:(m + 2) * n] = I / k
            value[r, m * n:(m + 1) * n] = (1.0 - th) * I
            value[r, (m + 1) * n:(m + 2) * n] = th * I
        start = np.zeros((n, size))
        start[:, :n] = I
        end = np.zeros((n, size))
        end[:, N * n:] = I
        return CoefficientOperators(deriv, value, start, end, 0, n, N)
    q = sol.q
    nb = q + 1
    size = n + N * nb * n
    I = np.eye(n)
    value = np.zeros((N * nb * n, size))
    value[:, n:] = np.eye(N * nb * n)
    psi0 = psi_basis(q).coeffs[0]
    deriv = np.zeros((N * nb * n, size))
    for m in range(N):
        base = m * nb * n
        col = n + base
        for i in range(q):  # broken derivative: (i+1) w_{i+1} / k
            deriv[base + i * n:base + (i + 1) * n, col + (i + 1) * n:col + (i + 2) * n] = (i + 1) / k * I
        # jump correction psi_0(s) (w_0^(m) - w_prev) / k
        for i in range(nb):
            rows = slice(base + i * n, base + (i + 1) * n)
            deriv[rows, col:col + n] += psi0[i] / k * I
            if m == 0:
                deriv[rows, 0:n] -= psi0[i] / k * I
            else:
                pc = n + (m - 1) * nb * n
                for l in range(nb):
                    deriv[rows, pc + l * n:pc + (l + 1) * n] -= psi0[i] / k * I
    start = np.zeros((n, size))
    start[:, :n] = I
    end = np.zeros((n, size))
    for l in range(nb):
        end[:, n + (N - 1) * nb * n + l * n:n + (N - 1) * nb * n + (l + 1) * n] = I
    return CoefficientOperators(deriv, value, start, end, q, n, N)


def surrogate_gram(sol: Solution, triple: SpaceTriple) -> np.ndarray:
    """Quadratic form of |dw|_{V'}^2 + |w|_V^2 + |w(0)|_H^2 + |w(T)|_H^2 on coefficients."""
    ops = coefficient_operators(sol)
    k, n, nb = sol.grid.k, ops.n, ops.q + 1
    A = hilbert_gram(ops.q)
    GH, GU = triple.gram_H, triple.gram_U
    W = _whitened(triple, GH)  # L^{-1} G_H ; (G_H G_U^{-1} G_H) = W^T W
    BV = k * np.kron(A, W.T @ W)
    BU = k * np.kron(A, GU)
    G = np.zeros((ops.deriv.shape[1],) * 2)
    for m in range(ops.N):
        r = slice(m * nb * n, (m + 1) * nb * n)
        Dm, Vm = ops.deriv[r], ops.value[r]
        G += Dm.T @ BV @ Dm + Vm.T @ BU @ Vm
    G += ops.start.T @ GH @ ops.start + ops.end.T @ GH @ ops.end
    return 0.5 * (G + G.T)


# ---------------------------------------------------------------------------
# exact functions

class ExactFunction:
    """Smooth function of time with values in U, known through loads.

    Subclasses provide ``h_load``/``u_load`` (pairings against the basis of a
    triple) for derivatives up to ``order`` and a reference representation for
    error computations.
    """

    order: int = 0
    label: str = "exact"

    def _check_order(self, order: int):
        if order > self.order:
            raise ConstructionError(f"{self.label}: derivative of order {order} not available (max {self.order})")

    def h_load(self, triple: SpaceTriple, t: float, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def u_load(self, triple: SpaceTriple, t: float, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def projection(self, triple: SpaceTriple, t: float, order: int = 0) -> np.ndarray:
        """Coefficients of the gram_U-orthogonal projection onto U_n."""
        return triple.solve_U(self.u_load(triple, t, order))

    def projection_error_sq(self, triple: SpaceTriple, t: float) -> float:
        """||u(t) - P u(t)||_U^2."""
        raise NotImplementedError

    def reference(self, triple: SpaceTriple) -> "Reference":
        raise NotImplementedError


class ModalFunction(ExactFunction):
    """Modal coefficients over a spectral basis: ``derivs[i](t)`` is u^{(i)}(t).

    ``eigenvalues`` covers all modes of the function; when omitted the
    function may only use modes present in the triple.
    """

    def __init__(self, derivs: Sequence[Callable], eigenvalues=None, label: str = "modal"):
        if not derivs:
            raise ConstructionError("need at least the value evaluator")
        self.derivs = list(derivs)
        self.order = len(self.derivs) - 1
        self.eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
        self.label = label

    def coeffs(self, t: float, order: int = 0) -> np.ndarray:
        self._check_order(order)
        return np.atleast_1d(np.asarray(self.derivs[order](float(t)), dtype=float))

    def _modes(self, triple: SpaceTriple) -> np.ndarray:
        if triple.kind != SPECTRAL:
            raise ConstructionError("modal functions need a spectral triple")
        ev = triple.eigenvalues
        if self.eigenvalues is None:
            return ev
        common = min(ev.size, self.eigenvalues.size)
        if not np.allclose(ev[:common], self.eigenvalues[:common], rtol=1e-12, atol=0):
            raise ConstructionError("function eigenvalues do not match the triple")
        return self.eigenvalues if self.eigenvalues.size >= ev.size else ev

    def _padded(self, t, order, size):
        c = self.coeffs(t, order)
        if c.size > size:
            return c[:size]
        out = np.zeros(size)
        out[:c.size] = c
        return out

    def h_load(self, triple, t, order=0):
        self._modes(triple)
        return self._padded(t, order, triple.dim)

    def u_load(self, triple, t, order=0):
        self._modes(triple)
        return triple.eigenvalues * self._padded(t, order, triple.dim)

    def projection_error_sq(self, triple, t):
        lam = self._modes(triple)
        c = self.coeffs(t)
        if c.size <= triple.dim:
            return 0.0
        if lam.size < c.size:
            raise ConstructionError("eigenvalues missing for modes beyond the triple")
        return float(np.sum(lam[triple.dim:c.size] * c[triple.dim:] ** 2))

    def reference(self, triple):
        lam = self._modes(triple)
        n_modes = self.coeffs(0.0).size
        size = max(triple.dim, n_modes)
        if lam.size < size:
            raise ConstructionError("eigenvalues missing for modes beyond the triple")
        return ExactReference(self, _ModalSpace(lam[:size], triple.dim), None)


class FieldFunction(ExactFunction):
    """Function of (t, x) on (0, L) for P1 triples.

    ``derivs[i](t, x)`` evaluates the i-th time derivative; ``dx(t, x)`` (optional)
    the spatial derivative of the value, needed by :func:`delta_n`.
    """

    def __init__(self, derivs: Sequence[Callable], length: float = 1.0, dx: Optional[Callable] = None,
                 label: str = "field"):
        self.derivs = list(derivs)
        self.order = len(self.derivs) - 1
        self.length = float(length)
        self.dx = dx
        self.label = label

    def _check(self, triple):
        if triple.kind != P1FEM or not math.isclose(triple.params["length"], self.length):
            raise ConstructionError("field functions need a P1 triple on the same interval")

    def h_load(self, triple, t, order=0):
        self._check(triple)
        self._check_order(order)
        g = self.derivs[order]
        return p1_h_load(triple, lambda x: g(float(t), x))

    def u_load(self, triple, t, order=0):
        self._check(triple)
        self._check_order(order)
        g = self.derivs[order]
        return p1_u_load(triple, lambda x: g(float(t), x))

    def u_norm_sq(self, t: float) -> float:
        if self.dx is None:
            raise ConstructionError(f"{self.label}: spatial derivative not provided")
        s, w = gauss_legendre01(8)
        cells = 256
        h = self.length / cells
        x = (np.arange(cells)[:, None] + s[None, :]) * h
        return float(np.sum(np.asarray(self.dx(float(t), x)) ** 2 * w[None, :]) * h)

    def projection_error_sq(self, triple, t):
        ell = self.u_load(triple, t)
        return max(self.u_norm_sq(t) - float(ell @ triple.solve_U(ell)), 0.0)

    def reference(self, triple):
        self._check(triple)
        fine = make_p1_fem_triple(triple.params["n_cells"] * REFERENCE_FACTOR, self.length)
        return ExactReference(self, _FemSpace(fine, triple), REFERENCE_FACTOR)


class SineSeriesFunction(FieldFunction):
    """u(t, x) = sum_j a_j(t) sin(j pi x / L); ``mode_derivs[i](t)`` gives a^{(i)}(t)."""

    def __init__(self, mode_derivs: Sequence[Callable], length: float = 1.0, label: str = "sine-series"):
        self.mode_derivs = list(mode_derivs)
        L = float(length)

        def make(i):
            def g(t, x):
                a = np.atleast_1d(np.asarray(self.mode_derivs[i](t), dtype=float))
                j = np.arange(1, a.size + 1)
                xx = np.asarray(x, dtype=float)
                return np.tensordot(np.sin(np.multiply.outer(xx, j) * math.pi / L), a, axes=([-1], [0]))
            return g

        def dx(t, x):
            a = np.atleast_1d(np.asarray(self.mode_derivs[0](t), dtype=float))
            j = np.arange(1, a.size + 1)
            xx = np.asarray(x, dtype=float)
            return np.tensordot(np.cos(np.multiply.outer(xx, j) * math.pi / L), a * j * math.pi / L, axes=([-1], [0]))

        super().__init__([make(i) for i in range(len(self.mode_derivs))], L, dx, label)

    def u_norm_sq(self, t):
        a = np.atleast_1d(np.asarray(self.mode_derivs[0](t), dtype=float))
        j = np.arange(1, a.size + 1)
        return float(np.sum(a ** 2 * (j * math.pi / self.length) ** 2) * self.length / 2)


# ---------------------------------------------------------------------------
# interpolants and delta_n

def interpolate_theta(u: ExactFunction, triple: SpaceTriple, grid: TimeGrid, theta: float) -> ThetaSolution:
    """Nodal U-projections of u at t = m k."""
    w = np.stack([u.projection(triple, t) for t in grid.nodes])
    return ThetaSolution(float(theta), grid, w, triple, meta={"interpolant": u.label})


def interpolate_dg(u: ExactFunction, triple: SpaceTriple, grid: TimeGrid, q: int) -> DgSolution:
    """w_i^(m) = k^i / i! P u^{(i)}(slab start), w0 = P u(0)."""
    if u.order < q:
        raise ConstructionError(f"interpolation of degree {q} needs {q} time derivatives, have {u.order}")
    k = grid.k
    W = np.empty((grid.N, q + 1, triple.dim))
    for m in range(grid.N):
        t0 = grid.slab_start(m)
        for i in range(q + 1):
            W[m, i] = k ** i / math.factorial(i) * u.projection(triple, t0, i)
    return DgSolution(q, grid, u.projection(triple, 0.0), W, triple, meta={"interpolant": u.label})


def delta_n(v: ExactFunction, triple: SpaceTriple, grid: TimeGrid, n_points: int = DELTA_QUAD_POINTS) -> float:
    """||v - P^U_n v||_V with Gauss quadrature per slab."""
    s, w = gauss_legendre01(n_points)
    total = 0.0
    for m in range(grid.N):
        t0 = grid.slab_start(m)
        total += grid.k * sum(wi * v.projection_error_sq(triple, t0 + grid.k * si) for si, wi in zip(s, w))
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# reference spaces and distances

class _ModalSpace:
    """l2 over modes with U weights; the triple's modes come first."""

    def __init__(self, lam: np.ndarray, coarse_dim: int):
        self.lam = np.asarray(lam, dtype=float)
        self.size = self.lam.size
        self.coarse_dim = coarse_dim
        self.gram_U = np.diag(self.lam)
        self.gram_H = np.eye(self.size)
        self.description = {"space": "modal", "modes": int(self.size)}

    def embedding(self, triple: SpaceTriple) -> np.ndarray:
        if triple.kind != SPECTRAL or triple.dim > self.size:
            raise ConstructionError("triple does not embed into the modal reference space")
        if not np.allclose(triple.eigenvalues, self.lam[:triple.dim], rtol=1e-12, atol=0):
            raise ConstructionError("triple eigenvalues differ from the reference space")
        E = np.zeros((self.size, triple.dim))
        E[:triple.dim, :triple.dim] = np.eye(triple.dim)
        return E

    def riesz(self, loads: np.ndarray) -> np.ndarray:
        return loads / self.lam


class _FemSpace:
    def __init__(self, fine: SpaceTriple, coarse: Optional[SpaceTriple]):
        self.triple = fine
        self.size = fine.dim
        self.gram_U = fine.gram_U
        self.gram_H = fine.gram_H
        self.description = {"space": "p1-reference", "n_cells": int(fine.params["n_cells"])}

    def embedding(self, triple: SpaceTriple) -> np.ndarray:
        if triple.kind != P1FEM:
            raise ConstructionError("triple does not embed into the P1 reference space")
        return p1_prolongation(triple, self.triple)

    def riesz(self, loads: np.ndarray) -> np.ndarray:
        return self.triple.solve_U(loads.T).T


class Reference:
    """Target of a distance computation, expressed in a reference space."""

    space = None
    grid: Optional[TimeGrid] = None
    meta: dict

    def values(self, ts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def riesz_derivative(self, ts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def node_samples(self, ts: np.ndarray):
        v = self.values(ts)
        return v, v, v

    def start(self) -> np.ndarray:
        raise NotImplementedError

    def end(self, T: float) -> np.ndarray:
        raise NotImplementedError


class ExactReference(Reference):
    def __init__(self, u: ExactFunction, space, factor: Optional[int]):
        self.u = u
        self.space = space
        self.grid = None
        self.meta = dict(space.description)
        self.meta["exact"] = u.label
        if factor:
            self.meta["reference_factor"] = factor

    def _loads(self, ts, order, kind):
        if isinstance(self.space, _ModalSpace):
            out = np.zeros((len(ts), self.space.size))
            for p, t in enumerate(ts):
                c = self.u.coeffs(t, order)[:self.space.size]
                out[p, :c.size] = c
            return out if kind == "h" else out * self.space.lam
        tri = self.space.triple
        f = self.u.h_load if kind == "h" else self.u.u_load
        return np.stack([f(tri, t, order) for t in ts])

    def values(self, ts):
        if isinstance(self.space, _ModalSpace):
            return self._loads(ts, 0, "h")
        return self.space.riesz(self._loads(ts, 0, "u"))

    def riesz_derivative(self, ts):
        return self.space.riesz(self._loads(ts, 1, "h"))

    def start(self):
        return self.values(np.array([0.0]))[0]

    def end(self, T):
        return self.values(np.array([T]))[0]


class DiscreteReference(Reference):
    """A (finer) discrete solution used in place of an exact one."""

    def __init__(self, sol: Solution, triple: SpaceTriple, space=None, note: str = "discrete reference"):
        self.sol = sol
        self.triple = triple
        if space is None:
            space = _ModalSpace(triple.eigenvalues, triple.dim) if triple.kind == SPECTRAL else _FemSpace(triple, None)
        self.space = space
        self.E = space.embedding(triple)
        self.grid = sol.grid
        self.meta = dict(space.description)
        self.meta["reference"] = note
        self.meta["reference_N"] = sol.grid.N

    def values(self, ts):
        return _sol_values(self.sol, ts) @ self.E.T

    def riesz_derivative(self, ts):
        return _sol_riesz_derivative(self.sol, self.triple, ts) @ self.E.T

    def node_samples(self, ts):
        return tuple(x @ self.E.T for x in _sol_node_samples(self.sol, ts))

    def start(self):
        return self.E @ self.sol.start

    def end(self, T):
        return self.E @ self.sol.end


def _slab_index(grid: TimeGrid, ts: np.ndarray):
    r = np.asarray(ts, dtype=float) / grid.k
    m = np.clip(np.floor(r).astype(int), 0, grid.N - 1)
    return m, r - m


def _sol_values(sol: Solution, ts: np.ndarray) -> np.ndarray:
    """Values at points strictly inside slabs, shape (P, n)."""
    m, s = _slab_index(sol.grid, ts)
    if _is_theta(sol):
        return plateaus(sol)[m]
    V = s[:, None] ** np.arange(sol.q + 1)[None, :]
    return np.einsum("pi,pin->pn", V, sol.slabs[m])


def _sol_riesz_derivative(sol: Solution, triple: SpaceTriple, ts: np.ndarray) -> np.ndarray:
    m, s = _slab_index(sol.grid, ts)
    D = derivative_coefficients(sol)
    V = s[:, None] ** np.arange(D.shape[1])[None, :]
    d = np.einsum("pi,pin->pn", V, D[m])
    return triple.solve_U(triple.gram_H @ d.T).T


def _sol_node_samples(sol: Solution, ts: np.ndarray):
    """(value, left limit, right limit) at times ts, each shape (P, n)."""
    grid = sol.grid
    out_v, out_l, out_r = [], [], []
    pl = plateaus(sol) if _is_theta(sol) else None
    for t in ts:
        m, s, node = grid.locate(float(t))
        if not node:
            v = _sol_values(sol, np.array([t]))[0]
            out_v.append(v), out_l.append(v), out_r.append(v)
            continue
        j = m + 1 if s == 1.0 else m  # node index
        if _is_theta(sol):
            val = sol.w[j]
            left = pl[j - 1] if j > 0 else val
            right = pl[j] if j < grid.N else val
        else:
            val = sol.w0 if j == 0 else sol.slabs[j - 1].sum(axis=0)
            left = val
            right = sol.slabs[j, 0] if j < grid.N else val
        out_v.append(val), out_l.append(left), out_r.append(right)
    return np.array(out_v), np.array(out_l), np.array(out_r)


def _common_grid(a: TimeGrid, b: Optional[TimeGrid]) -> TimeGrid:
    if b is None:
        return a
    if not math.isclose(a.T, b.T, rel_tol=1e-14):
        raise ConstructionError("reference and solution live on different time intervals")
    fine, coarse = (a, b) if a.N >= b.N else (b, a)
    if fine.N % coarse.N:
        raise ConstructionError("reference grid is not nested with the solution grid")
    return fine


def _quad_points(grid: TimeGrid, n_points: int):
    s, w = gauss_legendre01(n_points)
    ts = (grid.k * (np.arange(grid.N)[:, None] + s[None, :])).reshape(-1)
    ws = np.tile(w * grid.k, grid.N)
    return ts, ws


def error_bundle(u: Union[ExactFunction, Reference], sol: Solution, triple: SpaceTriple,
                 grid: Optional[TimeGrid] = None, n_points: int = ERROR_QUAD_POINTS) -> NormBundle:
    """Components of u - w: V'-distance of u' and dw, V, sup-H and trace distances.

    ``u`` is an :class:`ExactFunction` or a prepared :class:`Reference`.
    """
    ref = u if isinstance(u, Reference) else u.reference(triple)
    space = ref.space
    E = space.embedding(triple)
    fine = _common_grid(sol.grid, ref.grid)
    ts, ws = _quad_points(fine, n_points)
    GU, GH = space.gram_U, space.gram_H

    def wsum_sq(X, G):
        return float(np.sum(ws * np.einsum("pa,ab,pb->p", X, G, X)))

    dv = ref.values(ts) - _sol_values(sol, ts) @ E.T
    dr = ref.riesz_derivative(ts) - _sol_riesz_derivative(sol, triple, ts) @ E.T
    v_err = math.sqrt(max(wsum_sq(dv, GU), 0.0))
    vp_err = math.sqrt(max(wsum_sq(dr, GU), 0.0))
    nodes = fine.nodes
    rv, rl, rr = ref.node_samples(nodes)
    sv, sl, sr = (x @ E.T for x in _sol_node_samples(sol, nodes))
    samples = np.vstack([dv, rv - sv, rl - sl, rr - sr])
    sup = math.sqrt(max(float(np.max(np.einsum("pa,ab,pb->p", samples, GH, samples))), 0.0))
    d0 = ref.start() - E @ sol.start
    dT = ref.end(sol.grid.T) - E @ sol.end
    meta = dict(ref.meta)
    meta.update({"time_quadrature": f"{n_points}-point Gauss per slab of N={fine.N}",
                 "sup_sampling": "quadrature points plus value and one-sided limits at every node"})
    return NormBundle(vp_err, v_err, sup, math.sqrt(max(float(d0 @ GH @ d0), 0.0)),
                      math.sqrt(max(float(dT @ GH @ dT), 0.0)), meta)


def best_approximation(u: Union[ExactFunction, Reference], template: Solution, triple: SpaceTriple,
                       gram_X: Optional[np.ndarray] = None, n_points: int = ERROR_QUAD_POINTS) -> Solution:
    """Orthogonal projection of (u', u, u(0), u(T)) onto W_n in the surrogate quadruple norm."""
    ref = u if isinstance(u, Reference) else u.reference(triple)
    space = ref.space
    E = space.embedding(triple)
    fine = _common_grid(template.grid, ref.grid)
    ts, ws = _quad_points(fine, n_points)
    ops = coefficient_operators(template)
    n, nb, N = ops.n, ops.q + 1, ops.N
    m_idx, s = _slab_index(template.grid, ts)
    S = s[:, None] ** np.arange(nb)[None, :] * ws[:, None]  # (P, nb)
    # pull reference samples back to U_n' through the embedding
    R = ref.riesz_derivative(ts) @ space.gram_U @ E  # (P, n): <R u', E phi>_U
    Vv = ref.values(ts) @ space.gram_U @ E
    muR = np.zeros((N, nb, n))
    muV = np.zeros((N, nb, n))
    np.add.at(muR, m_idx, S[:, :, None] * R[:, None, :])
    np.add.at(muV, m_idx, S[:, :, None] * Vv[:, None, :])
    # derivative part pairs with G_U^{-1} G_H D, so transfer through G_H G_U^{-1}
    tR = (triple.gram_H @ triple.solve_U(muR.reshape(-1, n).T)).T.reshape(-1)
    g = ops.deriv.T @ tR + ops.value.T @ muV.reshape(-1)
    g += ops.start.T @ (E.T @ space.gram_H @ ref.start())
    g += ops.end.T @ (E.T @ space.gram_H @ ref.end(template.grid.T))
    G = surrogate_gram(template, triple) if gram_X is None else gram_X
    c = sla.cho_solve(sla.cho_factor(G, lower=True), g)
    return template.with_coefficients(c)
