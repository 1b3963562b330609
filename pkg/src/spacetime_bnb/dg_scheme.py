"""Time-discontinuous Galerkin dG(q) scheme with time coupling.

On slab m (0-based here, covering [m k, (m+1) k]) the discrete function is
``w(t) = sum_i s**i w_i^(m)`` with ``s = (t - m k)/k``.  The value at t = 0 is a
separate unknown ``w0``; the value at the right end of slab m is
``sum_i w_i^(m)``.  Testing with ``s**j phi_l`` gives, per slab,

    sum_i [i/(i+j)] gram_H w_i + delta_j0 gram_H (w_0 - w_prev)
        + k int_0^1 c(t) s**(i+j) ds A w_i = k int_0^1 s**j f ds

and the coupling row is ``gram_H w0 - pairing_H w(T) = xi0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConstructionError
from .grid import TimeGrid, quad_points_for, slab_coefficient_moments, slab_load_moments
from .linalg import certify, solve_guarded
from .timepoly import PsiBasis, derivative_table, hilbert_gram, poly_eval, psi_basis
from .triple import ContractionMap, FormSpec, SpaceTriple

Q_SCHEME_MAX = 6
DENSE_LIMIT = 6000


@dataclass(frozen=True, eq=False)
class DgSolution:
    q: int
    grid: TimeGrid
    w0: np.ndarray
    slabs: np.ndarray  # (N, q+1, n)
    triple: Optional[SpaceTriple] = None
    residual: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w0 = np.array(self.w0, dtype=float).reshape(-1)
        W = np.array(self.slabs, dtype=float)
        if W.ndim != 3 or W.shape[0] != self.grid.N or W.shape[1] != self.q + 1 or W.shape[2] != w0.size:
            raise ConstructionError(f"slab array has shape {W.shape}, expected ({self.grid.N}, {self.q + 1}, {w0.size})")
        w0.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "slabs", W)

    @property
    def dim(self) -> int:
        return self.w0.size

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.w0, self.slabs.reshape(-1)])

    @property
    def start(self) -> np.ndarray:
        return self.w0

    @property
    def end(self) -> np.ndarray:
        return self.slabs[-1].sum(axis=0)

    def right_values(self) -> np.ndarray:
        """w(m k) for m = 1..N, i.e. slab endpoint values, shape (N, n)."""
        return self.slabs.sum(axis=1)

    def left_limits(self) -> np.ndarray:
        """w((m-1)k^+) = w_0^(m), shape (N, n)."""
        return self.slabs[:, 0, :]

    def nodal_values(self) -> np.ndarray:
        """w(0), w(k), ..., w(T), shape (N+1, n)."""
        return np.vstack([self.w0[None], self.right_values()])

    def with_coefficients(self, c: np.ndarray) -> "DgSolution":
        c = np.asarray(c, dtype=float)
        n = self.dim
        return DgSolution(self.q, self.grid, c[:n], c[n:].reshape(self.slabs.shape), self.triple)


def previous_values(sol: DgSolution) -> np.ndarray:
    """w((m-1)k) seen from slab m: w0 for the first slab, then slab endpoints."""
    return np.vstack([sol.w0[None], sol.right_values()[:-1]])


def jumps(sol: DgSolution) -> np.ndarray:
    return sol.left_limits() - previous_values(sol)


@dataclass(frozen=True, eq=False)
class DgSystem:
    S: sp.csr_matrix
    b: np.ndarray
    q: int
    grid: TimeGrid
    triple: SpaceTriple
    phi: ContractionMap
    slab_blocks: np.ndarray  # (N, (q+1)n, (q+1)n)
    slab_rhs: np.ndarray  # (N, (q+1)n)
    xi0: np.ndarray
    quad_points: int


def _check_q(q):
    if int(q) != q or q < 0:
        raise ConstructionError("q must be a nonnegative integer")
    if q > Q_SCHEME_MAX:
        raise ConstructionError(f"q={q} exceeds the supported maximum {Q_SCHEME_MAX}")
    return int(q)


def slab_operator_blocks(form: FormSpec, triple: SpaceTriple, grid: TimeGrid, q: int,
                         quad_points: Optional[int] = None) -> np.ndarray:
    """Diagonal slab blocks (time derivative + left jump + stiffness), shape (N, (q+1)n, (q+1)n)."""
    n, k = triple.dim, grid.k
    GH = triple.gram_H
    D = derivative_table(q)
    E = np.zeros((q + 1, q + 1))
    E[0, 0] = 1.0
    C = slab_coefficient_moments(form, grid, q, quad_points_for(q, quad_points))
    base = np.kron(D + E, GH) + form.shift * k * np.kron(hilbert_gram(q), GH)
    out = np.empty((grid.N, (q + 1) * n, (q + 1) * n))
    for m in range(grid.N):
        out[m] = base + k * np.kron(C[m], form.matrix)
    return out


def assemble_dg_system(form: FormSpec, q: int, phi: ContractionMap, xi0, f: Optional[Callable],
                       triple: SpaceTriple, grid: TimeGrid, psi: Optional[PsiBasis] = None,
                       quad_points: Optional[int] = None) -> DgSystem:
    """Block system; unknown order is [w0, slab 0 (i = 0..q), slab 1, ...]."""
    q = _check_q(q)
    if psi is not None and psi.q != q:
        raise ConstructionError("psi basis degree differs from q")
    n, N, k = triple.dim, grid.N, grid.k
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    if xi0.shape != (n,):
        raise ConstructionError(f"xi0 must have length {n}")
    GH = triple.gram_H
    npts = quad_points_for(q, quad_points)
    K = slab_operator_blocks(form, triple, grid, q, npts)
    F = k * slab_load_moments(f, grid, q, n, npts)  # (N, q+1, n)
    nb = q + 1
    # previous-value coupling: row j = 0 of slab m against every coefficient of slab m-1 (or w0)
    jump_prev = np.zeros((nb * n, nb * n))
    for i in range(nb):
        jump_prev[:n, i * n:(i + 1) * n] = -GH
    jump_first = np.zeros((nb * n, n))
    jump_first[:n, :] = -GH

    blocks = [[None] * (N + 1) for _ in range(N + 1)]
    blocks[0][0] = sp.csr_matrix(GH)
    if phi.kind != "zero":
        blocks[0][N] = sp.csr_matrix(np.tile(-phi.pairing_H, (1, nb)))
    for m in range(N):
        blocks[m + 1][m + 1] = sp.csr_matrix(K[m])
        blocks[m + 1][m] = sp.csr_matrix(jump_first if m == 0 else jump_prev)
    S = sp.bmat(blocks, format="csr")
    b = np.concatenate([xi0, F.reshape(-1)])
    return DgSystem(S, b, q, grid, triple, phi, K, F.reshape(N, -1), xi0, npts)


def solve_dg(system: DgSystem, method: str = "auto") -> DgSolution:
    """Solve the assembled system; slab marching when Phi = 0."""
    tri, grid, q = system.triple, system.grid, system.q
    n, N, nb = tri.dim, grid.N, q + 1
    if method == "auto":
        method = "march" if system.phi.kind == "zero" else "global"
    if method == "march":
        if system.phi.kind != "zero":
            raise ConstructionError("slab marching needs Phi = 0")
        w0 = tri.solve_H(system.xi0)
        W = np.empty((N, nb, n))
        prev = w0
        lu, last = None, None
        for m in range(N):
            Km = system.slab_blocks[m]
            if lu is None or not np.array_equal(Km, last):
                lu, last = sla.lu_factor(Km), Km
            rhs = system.slab_rhs[m].copy()
            rhs[:n] += tri.gram_H @ prev
            W[m] = sla.lu_solve(lu, rhs).reshape(nb, n)
            prev = W[m].sum(axis=0)
        x = np.concatenate([w0, W.reshape(-1)])
    elif method == "global":
        x = solve_guarded(system.S, system.b, DENSE_LIMIT, "dG scheme")
    else:
        raise ConstructionError(f"unknown method {method!r}")
    res = certify(system.S, x, system.b, "dG scheme")
    meta = {"method": method, "phi": system.phi.descriptor(), "quad_points": system.quad_points}
    return DgSolution(q, grid, x[:n], x[n:].reshape(N, nb, n), tri, res, meta)


def corrected_derivative(sol: DgSolution, psi: Optional[PsiBasis] = None) -> np.ndarray:
    """Monomial coefficients of the jump-corrected derivative per slab, shape (N, q+1, n).

    Broken derivative plus (1/k) psi_0(s) times the jump at the left slab end.
    """
    q, k = sol.q, sol.grid.k
    psi = psi or psi_basis(q)
    out = np.zeros_like(sol.slabs)
    i = np.arange(1, q + 1)
    out[:, :q, :] = sol.slabs[:, 1:, :] * i[None, :, None] / k
    out += psi.coeffs[0][None, :, None] * jumps(sol)[:, None, :] / k
    return out


def broken_derivative(sol: DgSolution) -> np.ndarray:
    q, k = sol.q, sol.grid.k
    out = np.zeros_like(sol.slabs)
    out[:, :q, :] = sol.slabs[:, 1:, :] * np.arange(1, q + 1)[None, :, None] / k
    return out


def dg_reconstruct(sol: DgSolution, t: float, side: str = "right") -> np.ndarray:
    """Value at t; at a node, ``side`` picks the left or right limit."""
    if side not in ("left", "right"):
        raise ConstructionError("side must be 'left' or 'right'")
    m, s, node = sol.grid.locate(t)
    if node:
        if s == 1.0:  # t = T
            return sol.slabs[-1].sum(axis=0) if side == "left" else sol.slabs[-1].sum(axis=0)
        if side == "right":
            return sol.slabs[m, 0].copy()
        return sol.w0.copy() if m == 0 else sol.slabs[m - 1].sum(axis=0)
    return np.array([poly_eval(sol.slabs[m, :, l], s) for l in range(sol.dim)])


def slab_values(sol: DgSolution, s: np.ndarray) -> np.ndarray:
    """Values at local points s on every slab, shape (N, len(s), n)."""
    V = np.asarray(s, dtype=float)[:, None] ** np.arange(sol.q + 1)[None, :]
    return np.einsum("pi,min->mpn", V, sol.slabs)


def dg_energy_terms(sol: DgSolution, triple: SpaceTriple, psi: Optional[PsiBasis] = None):
    """(2 int <dw, w>_H, |w(T)|^2 + sum |jumps|^2 - |w(0)|^2)."""
    GH = triple.gram_H
    A = hilbert_gram(sol.q)
    D = corrected_derivative(sol, psi)
    lhs = 2.0 * sol.grid.k * float(np.einsum("ij,mia,ab,mjb->", A, D, GH, sol.slabs))
    J = jumps(sol)
    wT = sol.end
    rhs = float(wT @ GH @ wT) + float(np.einsum("ma,ab,mb->", J, GH, J)) - float(sol.w0 @ GH @ sol.w0)
    return lhs, rhs
