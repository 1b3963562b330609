"""Discrete inf-sup constants, CFL thresholds and the Hilbert-space inequalities.

The inf-sup constant is measured in the surrogate quadruple norm

    |x|^2 = |dw|_{V'}^2 + |w|_V^2 + |w(0)|_H^2 + |w(T)|_H^2

on X_n and in |y|^2 = |v|_V^2 + |z|_H^2 on Y_n = V_n x U_n.  With Gram
matrices G_X, G_Y and the matrix B of b(x, y) it is the smallest generalized
singular value of B, computed from the symmetric problem
B^T G_Y^{-1} B x = beta^2 G_X x (and its transpose for the dual constant).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .dg_scheme import DgSolution
from .errors import ConstructionError, NumericalError
from .grid import TimeGrid, slab_coefficient_moments
from .linalg import whiten_pair
from .norms import (coefficient_operators, hat_derivative_vprime_norm, h_pairing_derivative,
                    surrogate_gram, v_norm)
from .theta_scheme import ThetaSolution, average_form
from .timepoly import hilbert_gram
from .triple import ContractionMap, FormSpec, SpaceTriple

MATRIX_LIMIT = 6000
NORM_NAME = "surrogate quadruple norm (V' x V x H x H)"


# ---------------------------------------------------------------------------
# scheme descriptors

@dataclass(frozen=True)
class Scheme:
    kind: str  # "theta" or "dg"
    param: float  # theta or q

    def __post_init__(self):
        if self.kind == "theta":
            if not 0.0 <= float(self.param) <= 1.0:
                raise ConstructionError("theta must lie in [0, 1]")
            object.__setattr__(self, "param", float(self.param))
        elif self.kind == "dg":
            if int(self.param) != self.param or self.param < 0:
                raise ConstructionError("q must be a nonnegative integer")
            object.__setattr__(self, "param", int(self.param))
        else:
            raise ConstructionError(f"unknown scheme kind {self.kind!r}")

    @staticmethod
    def parse(text: Union[str, "Scheme"]) -> "Scheme":
        if isinstance(text, Scheme):
            return text
        kind, _, val = str(text).strip().partition(":")
        kind = kind.strip().lower()
        if kind not in ("theta", "dg") or not val:
            raise ConstructionError(f"bad scheme descriptor {text!r} (use theta:<value> or dg:<q>)")
        try:
            v = float(val)
        except ValueError:
            raise ConstructionError(f"bad scheme parameter in {text!r}") from None
        return Scheme(kind, v if kind == "theta" else int(v))

    def __str__(self):
        return f"{self.kind}:{self.param:g}" if self.kind == "theta" else f"dg:{self.param}"

    def template(self, triple: SpaceTriple, grid: TimeGrid):
        """Zero discrete function of this scheme (carries the shapes)."""
        n = triple.dim
        if self.kind == "theta":
            return ThetaSolution(self.param, grid, np.zeros((grid.N + 1, n)), triple)
        q = int(self.param)
        return DgSolution(q, grid, np.zeros(n), np.zeros((grid.N, q + 1, n)), triple)


# ---------------------------------------------------------------------------
# B, G_X, G_Y

@dataclass(frozen=True, eq=False)
class BSystem:
    B: np.ndarray
    gram_Y: np.ndarray
    template: object
    scheme: Scheme


def assemble_b_matrix(scheme, form: FormSpec, phi: ContractionMap, triple: SpaceTriple,
                      grid: TimeGrid) -> BSystem:
    """Matrix of b(x, y): rows follow the Y_n basis (slab test blocks, then U_n), columns W_n coefficients."""
    scheme = Scheme.parse(scheme)
    tmpl = scheme.template(triple, grid)
    ops = coefficient_operators(tmpl)
    n, N, k, nb = triple.dim, grid.N, grid.k, ops.q + 1
    size = ops.deriv.shape[1]
    if size > MATRIX_LIMIT:
        raise ConstructionError(f"inf-sup matrices of side {size} exceed the limit {MATRIX_LIMIT}")
    GH, GU = triple.gram_H, triple.gram_U
    A = hilbert_gram(ops.q)
    Hblk = k * np.kron(A, GH)
    if scheme.kind == "theta":
        stiff = k * average_form(form, triple, grid).A_m  # (N, n, n), includes shift
    else:
        C = slab_coefficient_moments(form, grid, ops.q)
        stiff = np.stack([k * (np.kron(C[m], form.matrix) + form.shift * np.kron(A, GH)) for m in range(N)])
    B = np.zeros((size, size))
    for m in range(N):
        r = slice(m * nb * n, (m + 1) * nb * n)
        B[r] = Hblk @ ops.deriv[r] + stiff[m] @ ops.value[r]
    B[N * nb * n:] = GH @ ops.start - phi.pairing_H @ ops.end
    GY = np.zeros((size, size))
    Ublk = k * np.kron(A, GU)
    for m in range(N):
        r = slice(m * nb * n, (m + 1) * nb * n)
        GY[r, r] = Ublk
    GY[N * nb * n:, N * nb * n:] = GH
    return BSystem(B, GY, tmpl, scheme)


def gram_X_surrogate(scheme, triple: SpaceTriple, grid: TimeGrid) -> np.ndarray:
    """SPD Gram matrix of the surrogate quadruple norm on W_n coefficients."""
    scheme = Scheme.parse(scheme)
    G = surrogate_gram(scheme.template(triple, grid), triple)
    whiten_pair(G)  # raises when not SPD
    return G


# ---------------------------------------------------------------------------
# inf-sup

@dataclass(frozen=True)
class InfSup:
    beta: float
    beta_dual: float
    method: str


def infsup_constant(B, G_X, G_Y, return_method: bool = False):
    """Smallest generalized singular value of B w.r.t. (G_X, G_Y): primal and dual.

    The primal value comes from the symmetric eigenproblem of B^T G_Y^{-1} B
    against G_X, the dual from B G_X^{-1} B^T against G_Y.  When the smallest
    eigenvalue is below the resolution of the squared problem, both are
    replaced by the SVD of the whitened matrix (flagged in ``method``).
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ConstructionError("B must be square")
    LX = whiten_pair(np.asarray(G_X, dtype=float))
    LY = whiten_pair(np.asarray(G_Y, dtype=float))
    if LX.shape != B.shape or LY.shape != B.shape:
        raise ConstructionError("Gram matrices do not match B")
    C = sla.solve_triangular(LY, B, lower=True)
    C = sla.solve_triangular(LX, C.T, lower=True).T  # L_Y^{-1} B L_X^{-T}
    n = C.shape[0]
    try:
        lp = sla.eigh(C.T @ C, eigvals_only=True, subset_by_index=[0, 0])[0]
        ld = sla.eigh(C @ C.T, eigvals_only=True, subset_by_index=[0, 0])[0]
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolve failed: {exc}") from None
    floor = 1e4 * np.finfo(float).eps * float(np.sum(C * C))
    if min(lp, ld) <= floor:
        s = float(sla.svdvals(C)[-1]) if n else 0.0
        res = InfSup(s, s, "svd")
    else:
        res = InfSup(math.sqrt(lp), math.sqrt(ld), "eigh")
    if return_method:
        return res
    return res.beta, res.beta_dual


def witness_ratio(B, G_X, G_Y, x) -> float:
    """sup_y b(x,y)/|y|_Y divided by |x|_X for one coefficient vector: an upper bound for beta."""
    x = np.asarray(x, dtype=float)
    Bx = B @ x
    num = math.sqrt(max(float(Bx @ sla.solve(G_Y, Bx, assume_a="pos")), 0.0))
    den = math.sqrt(max(float(x @ G_X @ x), 0.0))
    if den == 0.0:
        raise ConstructionError("witness vector has zero norm")
    return num / den


def alternating_witness(triple: SpaceTriple, grid: TimeGrid) -> np.ndarray:
    """w^m = (-1)^m k u with u the mu_n-extremal vector (theta coefficients)."""
    ev, vecs = sla.eigh(triple.gram_U, triple.gram_H)
    u = vecs[:, -1]
    u = u / triple.h_norm(u)
    signs = (-1.0) ** np.arange(grid.N + 1)
    return (grid.k * signs[:, None] * u[None, :]).reshape(-1)


def cfl_threshold(alpha: float, M: float, mu_n: float, theta: float) -> Optional[float]:
    """Step size bound k <= alpha^2 / (24 mu_n^2 M^3 (1/2 - theta)) for theta < 1/2, else None."""
    if not 0.0 <= theta <= 1.0:
        raise ConstructionError("theta must lie in [0, 1]")
    if theta >= 0.5:
        return None
    return alpha ** 2 / (24.0 * mu_n ** 2 * M ** 3 * (0.5 - theta))


@dataclass(frozen=True)
class BnbReport:
    scheme: str
    N: int
    T: float
    k: float
    dim: int
    triple: str
    phi: str
    alpha: float
    M: float
    beta_hat: float
    beta_hat_dual: float
    mu_n: float
    c_h: float
    cfl_threshold: Optional[float]
    cfl_margin: Optional[float]
    cfl_violated: bool
    witness_bound: Optional[float] = None
    method: str = "eigh"
    norm: str = NORM_NAME

    @property
    def duality_gap(self) -> float:
        return abs(self.beta_hat - self.beta_hat_dual)

    def to_row(self) -> dict:
        return asdict(self)


def bnb_report(scheme, form: FormSpec, phi: ContractionMap, triple: SpaceTriple, grid: TimeGrid,
               with_witness: Optional[bool] = None) -> BnbReport:
    """Assemble B, G_X, G_Y for one point and return the inf-sup report.

    The alternating witness bound is added automatically for theta = 1/2 with
    Phi = Id and even N (or when ``with_witness`` is True for a theta scheme).
    """
    scheme = Scheme.parse(scheme)
    bs = assemble_b_matrix(scheme, form, phi, triple, grid)
    GX = gram_X_surrogate(scheme, triple, grid)
    res = infsup_constant(bs.B, GX, bs.gram_Y, return_method=True)
    thr = cfl_threshold(form.alpha, form.M, triple.mu_n, scheme.param) if scheme.kind == "theta" else None
    margin = None if thr is None else thr / grid.k - 1.0
    if with_witness is None:
        with_witness = (scheme.kind == "theta" and scheme.param == 0.5 and phi.kind == "identity"
                        and grid.N % 2 == 0)
    wb = None
    if with_witness and scheme.kind == "theta":
        wb = witness_ratio(bs.B, GX, bs.gram_Y, alternating_witness(triple, grid))
    return BnbReport(str(scheme), grid.N, grid.T, grid.k, triple.dim, triple.label, phi.descriptor(),
                     float(form.alpha), float(form.M), res.beta, res.beta_dual, triple.mu_n, triple.c_h,
                     thr, margin, bool(margin is not None and margin < 0), wb, res.method)


# ---------------------------------------------------------------------------
# Hilbert-space inequalities

@dataclass(frozen=True)
class InequalityReport:
    name: str
    samples: int
    violations: int
    worst_slack: float  # min over samples of lhs - rhs
    worst_relative: float  # min of (lhs - rhs) / (|lhs| + |rhs|)
    witness: Optional[tuple] = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_coercive_operator(rng, dim: int, ratio: float, scale: float = 1.0):
    """Operator with coercivity alpha = scale*ratio and norm M = scale, in a random inner product.

    Returns (A, G, alpha, M) where A acts on coefficients and G is the Gram
    matrix of the inner product.  The Euclidean model is
    scale * Q R(phi) Q^T with 2x2 rotation blocks of angles |phi_i| <= acos(ratio),
    one of them attaining the bound (for dim >= 2).
    """
    rng = _rng(rng)
    if not 0 < ratio <= 1:
        raise ConstructionError("ratio alpha/M must lie in (0, 1]")
    phi_max = math.acos(ratio)
    R = np.zeros((dim, dim))
    i = 0
    first = True
    while i + 1 < dim:
        a = phi_max if first else rng.uniform(-phi_max, phi_max)
        first = False
        c, s = math.cos(a), math.sin(a)
        R[i:i + 2, i:i + 2] = [[c, -s], [s, c]]
        i += 2
    if i < dim:
        R[i, i] = 1.0 if dim > 1 else ratio
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    Ae = scale * Q @ R @ Q.T
    Lg = np.tril(rng.standard_normal((dim, dim)))
    Lg[np.diag_indices(dim)] = np.abs(np.diag(Lg)) + 0.5
    G = Lg @ Lg.T
    A = np.linalg.solve(Lg.T, Ae @ Lg.T)  # L^{-T} Ae L^T
    return A, G, scale * ratio, scale


def check_zigoto(A, alpha: float, M: float, samples: int = 1000, G=None, rng=None,
                 pairs: Optional[Sequence] = None) -> InequalityReport:
    """Check |w + A v|^2 >= 2 alpha <w, v> + (1/3)(alpha/M)^3 (|w|^2 + |v|^2).

    Norms use the Gram matrix G (identity by default).  Random pairs mix
    independent Gaussians with near-cancelling choices w = -t A v + noise.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    G = np.eye(n) if G is None else np.asarray(G, dtype=float)
    if M < 1 or alpha <= 0:
        raise ConstructionError("need M >= 1 and alpha > 0")
    rng = _rng(rng)
    if pairs is None:
        V = rng.standard_normal((samples, n))
        W = rng.standard_normal((samples, n))
        t = rng.uniform(0.0, 2.0, size=(samples, 1))
        half = samples // 2
        W[:half] = -t[:half] * (V[:half] @ A.T) + 0.05 * W[:half]
    else:
        V = np.array([p[0] for p in pairs], dtype=float)
        W = np.array([p[1] for p in pairs], dtype=float)
    c = (alpha / M) ** 3 / 3.0
    X = W + V @ A.T
    lhs = np.einsum("pa,ab,pb->p", X, G, X)
    ww = np.einsum("pa,ab,pb->p", W, G, W)
    vv = np.einsum("pa,ab,pb->p", V, G, V)
    rhs = 2 * alpha * np.einsum("pa,ab,pb->p", W, G, V) + c * (ww + vv)
    return _ineq_report("zigoto", lhs, rhs, V, W)


def random_contraction(rng, dim: int, norm: float) -> np.ndarray:
    rng = _rng(rng)
    X = rng.standard_normal((dim, dim))
    s = np.linalg.norm(X, 2)
    return X * (norm / s) if s > 0 else X


def check_peterpaul2(phi_norm: float, a: float, b: float, samples: int = 1000, rng=None, dim: int = 4,
                     phi=None) -> InequalityReport:
    """Check a|w|^2 - b|v|^2 + (9a^2/gamma)|v - Phi w|^2 >= (gamma/3)(|w|^2 + |v|^2).

    gamma = a - b*phi_norm^2.  A random Phi of the given spectral norm is drawn
    unless ``phi`` is supplied.  Near-critical pairs v = Phi w + noise are mixed in.
    """
    if not (0 <= phi_norm <= 1 and a > 0 and 0 <= b <= a):
        raise ConstructionError("need 0 <= |Phi| <= 1, a > 0, 0 <= b <= a")
    gamma = a - b * phi_norm ** 2
    if gamma <= 0:
        raise ConstructionError("gamma = a - b |Phi|^2 must be positive")
    rng = _rng(rng)
    P = random_contraction(rng, dim, phi_norm) if phi is None else np.asarray(phi, dtype=float)
    dim = P.shape[0]
    W = rng.standard_normal((samples, dim))
    V = rng.standard_normal((samples, dim))
    half = samples // 2
    V[:half] = W[:half] @ P.T + rng.uniform(0, 0.2) * V[:half]
    D = V - W @ P.T
    ww = np.sum(W * W, axis=1)
    vv = np.sum(V * V, axis=1)
    lhs = a * ww - b * vv + 9 * a * a / gamma * np.sum(D * D, axis=1)
    rhs = gamma / 3 * (ww + vv)
    return _ineq_report("peterpaul2", lhs, rhs, V, W)


def _ineq_report(name, lhs, rhs, V, W) -> InequalityReport:
    slack = lhs - rhs
    scale = np.abs(lhs) + np.abs(rhs)
    rel = np.where(scale > 0, slack / np.where(scale > 0, scale, 1.0), 0.0)
    # count as a violation only beyond rounding
    viol = slack < -1e-12 * np.maximum(scale, 1e-300)
    i = int(np.argmin(rel)) if rel.size else 0
    wit = (V[i].tolist(), W[i].tolist()) if rel.size else None
    return InequalityReport(name, int(lhs.size), int(np.sum(viol)), float(slack.min(initial=np.inf)),
                            float(rel.min(initial=np.inf)), wit)


@dataclass(frozen=True)
class CondlimReport:
    samples: int
    violations: int
    worst_margin: float
    max_delta_extra: float  # largest d such that the inequality holds with mu + d on all samples
    mu: float
    nu: float


def check_condlim(solutions: Sequence, triple: SpaceTriple, alpha: float, M: float, mu: float, nu: float,
                  omega: Optional[float] = None, delta: Optional[float] = None,
                  phi: Optional[ContractionMap] = None) -> CondlimReport:
    """Evaluate <dw, w> + (alpha^2/(12 M^3))(|w|_V^2 + |dw|_{V'}^2) - mu|w(T)|^2 + nu|w(0)|^2 on samples."""
    if omega is not None and not 0 < mu <= omega:
        raise ConstructionError("need 0 < mu <= omega")
    if not 0 <= nu <= mu:
        raise ConstructionError("need 0 <= nu <= mu")
    if delta is not None and phi is not None and mu - nu * phi.certified_norm ** 2 < delta:
        raise ConstructionError("need mu - nu |Phi|^2 >= delta")
    c = alpha ** 2 / (12.0 * M ** 3)
    margins, extra = [], np.inf
    for w in solutions:
        pair = h_pairing_derivative(w, triple)
        base = pair + c * (v_norm(w, triple) ** 2 + hat_derivative_vprime_norm(w, triple) ** 2)
        wT = triple.h_norm(w.end) ** 2
        w0 = triple.h_norm(w.start) ** 2
        margin = base - mu * wT + nu * w0
        margins.append(margin)
        if wT > 0:
            extra = min(extra, margin / wT)
    margins = np.array(margins)
    scale = 1e-12 * (1.0 + np.abs(margins))
    return CondlimReport(len(margins), int(np.sum(margins < -scale)), float(margins.min(initial=np.inf)),
                         float(extra), float(mu), float(nu))
