"""Discrete Gelfand triples U_n in U in H, coupling operators and bilinear forms.

A triple is described by two Gram matrices over a finite basis
(phi_1, ..., phi_n): ``gram_U[i, j] = <phi_j, phi_i>_U`` (stiffness-like) and
``gram_H[i, j] = <phi_j, phi_i>_H`` (mass-like).  Two families are provided:

* ``spectral-diagonal``: H = l2, U = weighted l2, ``gram_H = I`` and
  ``gram_U = diag(lambda_1, ..., lambda_n)``;
* ``p1-fem-dirichlet``: continuous piecewise linear elements on a uniform mesh
  of (0, L) with homogeneous Dirichlet conditions, ``||u||_U = ||u'||_L2``.

All objects are immutable; factorizations and spectral constants are computed
once at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import ConstructionError, ContractionViolation, NumericalError, RescaleInfeasible

SPECTRAL = "spectral-diagonal"
P1FEM = "p1-fem-dirichlet"
GENERAL = "general-gram"

_SYM_TOL = 1e-14
_CONTRACTION_TOL = 1e-12
_FORM_TOL = 1e-10
SPACE_QUAD_POINTS = 5


@lru_cache(maxsize=64)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = _gauss01(int(n))
    return x.copy(), w.copy()


def _check_gram(name: str, G: np.ndarray) -> np.ndarray:
    G = np.array(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
        raise ConstructionError(f"{name} must be a nonempty square matrix, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise ConstructionError(f"{name} has non-finite entries")
    scale = max(np.abs(G).max(), np.finfo(float).tiny)
    if np.abs(G - G.T).max() > _SYM_TOL * scale:
        raise ConstructionError(f"{name} is not symmetric")
    return 0.5 * (G + G.T)


@dataclass(frozen=True, eq=False)
class SpaceTriple:
    """Discrete Gelfand triple given by its two Gram matrices.

    Use :func:`make_spectral_triple` or :func:`make_p1_fem_triple` rather than
    calling the constructor directly.
    """

    gram_U: np.ndarray
    gram_H: np.ndarray
    label: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        gu = _check_gram("gram_U", self.gram_U)
        gh = _check_gram("gram_H", self.gram_H)
        if gu.shape != gh.shape:
            raise ConstructionError("gram_U and gram_H have different shapes")
        if self.kind not in (SPECTRAL, P1FEM, GENERAL):
            raise ConstructionError(f"unknown triple kind {self.kind!r}")
        try:
            cu = sla.cho_factor(gu, lower=True)
            ch = sla.cho_factor(gh, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ConstructionError(f"Gram matrix is not positive definite: {exc}") from None
        try:
            ev = sla.eigh(gu, gh, eigvals_only=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"generalized eigensolve of (gram_U, gram_H) failed: {exc}") from None
        if ev[0] <= 0:
            raise NumericalError(f"nonpositive generalized eigenvalue {ev[0]!r}")
        gu.setflags(write=False)
        gh.setflags(write=False)
        ev.setflags(write=False)
        object.__setattr__(self, "gram_U", gu)
        object.__setattr__(self, "gram_H", gh)
        object.__setattr__(self, "_chol_U", cu)
        object.__setattr__(self, "_chol_H", ch)
        object.__setattr__(self, "_gen_eigs", ev)

    @property
    def dim(self) -> int:
        return self.gram_U.shape[0]

    @property
    def generalized_eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of gram_U v = lambda gram_H v."""
        return self._gen_eigs

    @property
    def mu_n(self) -> float:
        return math.sqrt(self._gen_eigs[-1])

    @property
    def c_h(self) -> float:
        return 1.0 / math.sqrt(self._gen_eigs[0])

    @property
    def chol_U_lower(self) -> np.ndarray:
        return np.tril(self._chol_U[0])

    @property
    def chol_H_lower(self) -> np.ndarray:
        return np.tril(self._chol_H[0])

    def solve_U(self, b: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self._chol_U, b)

    def solve_H(self, b: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self._chol_H, b)

    def u_norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return math.sqrt(max(float(x @ self.gram_U @ x), 0.0))

    def h_norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return math.sqrt(max(float(x @ self.gram_H @ x), 0.0))

    # -- P1 helpers -----------------------------------------------------
    @property
    def nodes(self) -> np.ndarray:
        """Interior mesh nodes (P1 triples only)."""
        if self.kind != P1FEM:
            raise ConstructionError("nodes are only defined for P1 triples")
        n, L = self.params["n_cells"], self.params["length"]
        return np.linspace(0.0, L, n + 1)[1:-1]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Diagonal of gram_U (spectral triples only)."""
        if self.kind != SPECTRAL:
            raise ConstructionError("eigenvalues are only defined for spectral triples")
        return np.diag(self.gram_U).copy()

    def to_dict(self) -> dict:
        if self.kind == SPECTRAL:
            return {"kind": SPECTRAL, "label": self.label, "eigenvalues": [float(v) for v in self.eigenvalues]}
        if self.kind == GENERAL:
            return {"kind": GENERAL, "label": self.label, "gram_U": self.gram_U.tolist(),
                    "gram_H": self.gram_H.tolist()}
        return {"kind": P1FEM, "label": self.label, "n_cells": int(self.params["n_cells"]),
                "length": float(self.params["length"])}

    @staticmethod
    def from_dict(d: dict) -> "SpaceTriple":
        kind = d.get("kind")
        if kind == SPECTRAL:
            ev = list(d["eigenvalues"])
            return make_spectral_triple(len(ev), ev, label=d.get("label"))
        if kind == P1FEM:
            return make_p1_fem_triple(int(d["n_cells"]), float(d["length"]), label=d.get("label"))
        if kind == GENERAL:
            return make_gram_triple(d["gram_U"], d["gram_H"], label=d.get("label"))
        raise ConstructionError(f"unknown triple kind {kind!r}")


def make_spectral_triple(n_modes: int, eigenvalues, label: Optional[str] = None) -> SpaceTriple:
    """Diagonal model: gram_H = I, gram_U = diag(eigenvalues).

    >>> make_spectral_triple(3, [1, 4, 9]).mu_n
    3.0
    """
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    if int(n_modes) != n_modes or n_modes < 1:
        raise ConstructionError("n_modes must be a positive integer")
    if ev.size != n_modes:
        raise ConstructionError(f"expected {n_modes} eigenvalues, got {ev.size}")
    if not np.all(np.isfinite(ev)) or np.any(ev <= 0):
        raise ConstructionError("eigenvalues must be finite and strictly positive")
    if np.any(np.diff(ev) < 0):
        raise ConstructionError("eigenvalues must be ascending")
    n = int(n_modes)
    return SpaceTriple(np.diag(ev), np.eye(n), label or f"spectral({n})", SPECTRAL,
                       {"eigenvalues": tuple(float(v) for v in ev)})


def make_p1_fem_triple(n_cells: int, length: float = 1.0, label: Optional[str] = None) -> SpaceTriple:
    """P1 elements on a uniform mesh of (0, length) with Dirichlet conditions."""
    if int(n_cells) != n_cells or n_cells < 2:
        raise ConstructionError("n_cells must be an integer >= 2")
    if not (length > 0 and math.isfinite(length)):
        raise ConstructionError("length must be positive")
    n = int(n_cells)
    h = float(length) / n
    m = n - 1
    K = (2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)) / h
    Mass = (4.0 * np.eye(m) + np.eye(m, k=1) + np.eye(m, k=-1)) * (h / 6.0)
    return SpaceTriple(K, Mass, label or f"p1({n},{length:g})", P1FEM,
                       {"n_cells": n, "length": float(length)})


def make_gram_triple(gram_U, gram_H, label: Optional[str] = None) -> SpaceTriple:
    """Triple from arbitrary symmetric positive definite Gram matrices."""
    gu = np.array(gram_U, dtype=float)
    return SpaceTriple(gu, np.array(gram_H, dtype=float), label or f"gram({gu.shape[0] if gu.ndim else 0})",
                       GENERAL, {})


def inverse_inequality_constant(triple: SpaceTriple) -> float:
    """Best mu_n with ||u||_U <= mu_n ||u||_H on U_n."""
    return triple.mu_n


def embedding_constant(triple: SpaceTriple) -> float:
    """Best discrete C_H with ||u||_H <= C_H ||u||_U on U_n (a lower bound for the continuous one)."""
    return triple.c_h


def riesz_dual_norm(triple: SpaceTriple, dual_vector) -> float:
    """U'-norm of the functional u -> l.u, i.e. sqrt(l^T gram_U^{-1} l)."""
    ell = np.asarray(dual_vector, dtype=float)
    if ell.shape != (triple.dim,):
        raise ConstructionError(f"dual vector must have shape ({triple.dim},), got {ell.shape}")
    y = sla.solve_triangular(triple.chol_U_lower, ell, lower=True)
    return float(np.sqrt(y @ y))


def riesz_map(triple: SpaceTriple, dual_vectors: np.ndarray) -> np.ndarray:
    """Coefficients of the U-Riesz representers of the given load vectors (columns or 1d)."""
    return triple.solve_U(dual_vectors)


# -- spatial loads -------------------------------------------------------

def p1_h_load(triple: SpaceTriple, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """<g, phi_i>_H for a spatial function g, 5-point Gauss rule per cell."""
    if triple.kind != P1FEM:
        raise ConstructionError("p1_h_load needs a P1 triple")
    n, L = triple.params["n_cells"], triple.params["length"]
    h = L / n
    s, w = _gauss01(SPACE_QUAD_POINTS)
    left = np.arange(n)[:, None] * h
    x = left + h * s[None, :]
    gx = np.asarray(g(x), dtype=float).reshape(x.shape)
    # cell c carries phi_c (falling, 1 - s) and phi_{c+1} (rising, s); node index = cell index
    rising = (gx * (w * s)[None, :]).sum(axis=1) * h
    falling = (gx * (w * (1.0 - s))[None, :]).sum(axis=1) * h
    return rising[:-1] + falling[1:]


def p1_u_load(triple: SpaceTriple, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """<g, phi_i>_U = int g' phi_i' dx, exact from nodal values of g."""
    if triple.kind != P1FEM:
        raise ConstructionError("p1_u_load needs a P1 triple")
    n, L = triple.params["n_cells"], triple.params["length"]
    h = L / n
    gv = np.asarray(g(np.linspace(0.0, L, n + 1)), dtype=float)
    return (2.0 * gv[1:-1] - gv[:-2] - gv[2:]) / h


def p1_prolongation(coarse: SpaceTriple, fine: SpaceTriple) -> np.ndarray:
    """Matrix mapping coarse P1 coefficients to fine ones on a nested mesh."""
    if coarse.kind != P1FEM or fine.kind != P1FEM:
        raise ConstructionError("prolongation needs P1 triples")
    nc, nf = coarse.params["n_cells"], fine.params["n_cells"]
    if nf % nc or not math.isclose(coarse.params["length"], fine.params["length"]):
        raise ConstructionError("meshes are not nested")
    r = nf // nc
    P = np.zeros((nf - 1, nc - 1))
    xf = np.arange(1, nf) / r  # fine nodes in coarse-cell units
    for j in range(nc - 1):
        P[:, j] = np.clip(1.0 - np.abs(xf - (j + 1)), 0.0, None)
    return P


# -- coupling operator -----------------------------------------------------

_PHI_KINDS = ("zero", "identity", "neg-identity", "scalar", "custom")


@dataclass(frozen=True, eq=False)
class ContractionMap:
    """Coupling operator Phi stored through its H-pairing <Phi phi_j, phi_i>_H."""

    pairing_H: np.ndarray
    kind: str
    certified_norm: float
    scalar: Optional[float] = None

    @property
    def matrix(self) -> np.ndarray:
        """Coefficient matrix of Phi restricted to U_n (gram_H^{-1} pairing_H)."""
        return self._matrix

    def descriptor(self) -> str:
        if self.kind == "scalar":
            return f"scalar:{self.scalar!r}"
        return self.kind

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "certified_norm": self.certified_norm}
        if self.kind == "scalar":
            d["scalar"] = self.scalar
        if self.kind == "custom":
            d["pairing_H"] = self.pairing_H.tolist()
        return d


def _h_operator_norm(triple: SpaceTriple, pairing: np.ndarray) -> float:
    L = triple.chol_H_lower
    X = sla.solve_triangular(L, pairing, lower=True)
    X = sla.solve_triangular(L, X.T, lower=True).T
    return float(np.linalg.norm(X, 2))


def make_contraction(kind, triple: SpaceTriple, custom_pairing=None, scalar: Optional[float] = None) -> ContractionMap:
    """Build Phi. ``kind`` is one of zero, identity, neg-identity, scalar, custom.

    A string like ``"scalar:0.5"`` is accepted as shorthand.  For ``custom``
    the certified norm only bounds the restriction of Phi to U_n.
    """
    if isinstance(kind, str) and kind.startswith("scalar:"):
        kind, scalar = "scalar", float(kind.split(":", 1)[1])
    if kind not in _PHI_KINDS:
        raise ConstructionError(f"unknown contraction kind {kind!r}")
    n = triple.dim
    gh = triple.gram_H
    if kind == "scalar":
        if scalar is None or not math.isfinite(scalar):
            raise ConstructionError("scalar contraction needs a finite scalar")
        c = float(scalar)
        if c == 0.0:
            kind = "zero"
        elif c == 1.0:
            kind = "identity"
        elif c == -1.0:
            kind = "neg-identity"
    if kind == "zero":
        pairing, norm, c = np.zeros((n, n)), 0.0, 0.0
    elif kind == "identity":
        pairing, norm, c = gh.copy(), 1.0, 1.0
    elif kind == "neg-identity":
        pairing, norm, c = -gh, 1.0, -1.0
    elif kind == "scalar":
        pairing, norm = c * gh, abs(c)
    else:
        if custom_pairing is None:
            raise ConstructionError("custom contraction needs a pairing matrix")
        pairing = np.array(custom_pairing, dtype=float)
        if pairing.shape != (n, n):
            raise ConstructionError(f"pairing must be {n}x{n}, got {pairing.shape}")
        if not np.all(np.isfinite(pairing)):
            raise ConstructionError("pairing has non-finite entries")
        norm, c = _h_operator_norm(triple, pairing), None
    if norm > 1.0 + _CONTRACTION_TOL:
        raise ContractionViolation(norm)
    pairing.setflags(write=False)
    phi = ContractionMap(pairing, kind, float(norm), c if kind == "scalar" else None)
    if kind == "zero":
        mat = np.zeros((n, n))
    elif kind in ("identity", "neg-identity", "scalar"):
        mat = c * np.eye(n)
    else:
        mat = triple.solve_H(pairing)
    object.__setattr__(phi, "_matrix", mat)
    return phi


# -- bilinear forms --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormSpec:
    """Time dependent form a(t, u, v) = c(t) v^T A u + shift * v^T gram_H u.

    ``matrix[i, j] = a(phi_j, phi_i)`` for c = 1.  ``coefficient`` is a scalar
    function of t (None means c = 1) with values in ``coefficient_bounds``.
    Coercivity and continuity against (alpha, M) are verified exactly at
    construction through generalized eigenvalue problems.
    """

    triple: SpaceTriple
    matrix: np.ndarray
    alpha: float
    M: float
    coefficient: Optional[Callable] = None
    coefficient_bounds: tuple = (1.0, 1.0)
    shift: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        n = self.triple.dim
        if A.shape != (n, n):
            raise ConstructionError(f"form matrix must be {n}x{n}")
        if not np.all(np.isfinite(A)):
            raise ConstructionError("form matrix has non-finite entries")
        alpha, M = float(self.alpha), float(self.M)
        if not alpha > 0:
            raise ConstructionError("coercivity constant alpha must be positive")
        if M < max(1.0, alpha):
            raise ConstructionError("continuity constant M must be >= max(1, alpha)")
        lo, hi = (float(v) for v in self.coefficient_bounds)
        if self.coefficient is None and (lo, hi) != (1.0, 1.0):
            raise ConstructionError("coefficient bounds given without a coefficient")
        if not (0 < lo <= hi):
            raise ConstructionError("coefficient bounds must satisfy 0 < lo <= hi")
        if self.shift < 0:
            raise ConstructionError("shift must be nonnegative")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "coefficient_bounds", (lo, hi))
        coer, cont = _form_constants(self.triple, A, lo, hi, float(self.shift))
        if coer < alpha * (1 - _FORM_TOL) - _FORM_TOL:
            raise ConstructionError(f"form is not {alpha}-coercive (best constant {coer!r})")
        if cont > M * (1 + _FORM_TOL) + _FORM_TOL:
            raise ConstructionError(f"form is not {M}-continuous (norm {cont!r})")
        object.__setattr__(self, "certified", (coer, cont))

    @property
    def is_constant(self) -> bool:
        return self.coefficient is None

    def coefficient_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.coefficient is None:
            return np.ones_like(t)
        vals = np.asarray(self.coefficient(t), dtype=float)
        vals = np.broadcast_to(vals, t.shape)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("form coefficient returned non-finite values")
        return vals

    def matrix_at(self, t: float) -> np.ndarray:
        c = float(self.coefficient_values(np.array([t]))[0])
        return c * self.matrix + self.shift * self.triple.gram_H

    def to_dict(self) -> dict:
        return {"label": self.label, "alpha": self.alpha, "M": self.M, "shift": self.shift,
                "time_dependent": not self.is_constant, "coefficient_bounds": list(self.coefficient_bounds)}


def _form_constants(triple: SpaceTriple, A: np.ndarray, lo: float, hi: float, shift: float):
    L = triple.chol_U_lower

    def whiten(X):
        Y = sla.solve_triangular(L, X, lower=True)
        return sla.solve_triangular(L, Y.T, lower=True).T

    Aw = whiten(A)
    Hw = whiten(triple.gram_H)
    coer, cont = np.inf, 0.0
    # both quantities are extremal at an end of the coefficient range
    for c in {lo, hi}:
        Bw = c * Aw + shift * Hw
        coer = min(coer, float(np.linalg.eigvalsh(0.5 * (Bw + Bw.T))[0]))
        cont = max(cont, float(np.linalg.norm(Bw, 2)))
    return coer, cont


def make_form(triple: SpaceTriple, matrix=None, alpha: float = 1.0, M: float = 1.0,
              coefficient: Optional[Callable] = None, coefficient_bounds=None,
              label: Optional[str] = None) -> FormSpec:
    """Convenience constructor; ``matrix=None`` means the U inner product itself."""
    A = triple.gram_U if matrix is None else matrix
    bounds = (1.0, 1.0) if coefficient_bounds is None else tuple(coefficient_bounds)
    return FormSpec(triple, A, alpha, M, coefficient, bounds,
                    label=label or ("stiffness" if matrix is None else "custom"))


def form_constants(triple: SpaceTriple, matrix, coefficient_bounds=(1.0, 1.0), shift: float = 0.0):
    """Best (coercivity, continuity) constants of c*A + shift*gram_H over the coefficient range."""
    lo, hi = coefficient_bounds
    return _form_constants(triple, np.asarray(matrix, dtype=float), float(lo), float(hi), float(shift))


# -- exponential rescaling -------------------------------------------------

@dataclass(frozen=True)
class ExponentialTransform:
    """u(t) = exp(lam t) u~(t) and f~(t) = exp(-lam t) f(t)."""

    lam: float

    def data(self, f: Callable) -> Callable:
        if self.lam == 0.0:
            return f
        lam = self.lam
        return lambda t: math.exp(-lam * t) * np.asarray(f(t), dtype=float)

    def data_inverse(self, f_tilde: Callable) -> Callable:
        if self.lam == 0.0:
            return f_tilde
        lam = self.lam
        return lambda t: math.exp(lam * t) * np.asarray(f_tilde(t), dtype=float)

    def solution(self, t: float, value_tilde) -> np.ndarray:
        return math.exp(self.lam * t) * np.asarray(value_tilde, dtype=float)

    def solution_inverse(self, t: float, value) -> np.ndarray:
        return math.exp(-self.lam * t) * np.asarray(value, dtype=float)


def rescale_problem(form: FormSpec, phi: ContractionMap, lam: float, T: float):
    """Shift a(u, v) by lam <u, v>_H and scale Phi by exp(lam T).

    Returns ``(form_tilde, phi_tilde, transform)``.  Raises
    :class:`RescaleInfeasible` when exp(lam T) ||Phi|| > 1.
    """
    if not (lam >= 0 and math.isfinite(lam)):
        raise ConstructionError("lambda must be a finite nonnegative number")
    if not T > 0:
        raise ConstructionError("T must be positive")
    growth = math.exp(lam * T)
    if growth * phi.certified_norm > 1.0 + _CONTRACTION_TOL:
        raise RescaleInfeasible(f"exp(lambda*T)*||Phi|| = {growth * phi.certified_norm!r} > 1")
    if lam == 0.0:
        return form, phi, ExponentialTransform(0.0)
    triple = form.triple
    M_new = form.M + lam * triple.c_h ** 2
    form_t = FormSpec(triple, form.matrix, form.alpha, M_new, form.coefficient,
                      form.coefficient_bounds, form.shift + lam, label=f"{form.label}+shift")
    if phi.kind == "custom":
        phi_t = make_contraction("custom", triple, growth * phi.pairing_H)
    else:
        c = {"zero": 0.0, "identity": 1.0, "neg-identity": -1.0}.get(phi.kind, phi.scalar)
        c = growth * c
        if abs(abs(c) - 1.0) <= _CONTRACTION_TOL:
            c = math.copysign(1.0, c)
        phi_t = make_contraction("scalar", triple, scalar=c)
    return form_t, phi_t, ExponentialTransform(float(lam))
