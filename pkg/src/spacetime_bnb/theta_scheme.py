"""Euler theta-scheme with the time coupling w(0) - Phi w(T) = xi0.

Unknowns are the nodal vectors w^0, ..., w^N.  The equations are

    gram_H w^0 - pairing_H w^N = xi0
    gram_H (w^{m+1} - w^m)/k + A_m (theta w^{m+1} + (1-theta) w^m) = f_m,  m = 0..N-1

with slab averages A_m and f_m.  The discrete function takes the nodal value
w^m at t = m k and the plateau theta w^{m+1} + (1-theta) w^m inside slab m.
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
from .triple import ContractionMap, FormSpec, SpaceTriple

DENSE_LIMIT = 4096

__all__ = ["TimeGrid", "SlabData", "ThetaSolution", "average_form", "solve_theta", "reconstruct",
           "discrete_derivative", "plateaus", "assemble_theta_system", "theta_energy_terms"]


@dataclass(frozen=True, eq=False)
class SlabData:
    """Slab averages of the operator and of the load."""

    A_m: np.ndarray  # (N, n, n)
    f_m: np.ndarray  # (N, n)
    quad_points: int
    constant: bool

    @property
    def N(self) -> int:
        return self.A_m.shape[0]


def average_form(form: FormSpec, triple: SpaceTriple, grid: TimeGrid, f: Optional[Callable] = None,
                 quad_points: Optional[int] = None) -> SlabData:
    """A_m = (1/k) int a(t) dt and f_m = (1/k) int f dt over each slab."""
    if form.triple is not triple and form.triple.dim != triple.dim:
        raise ConstructionError("form and triple dimensions differ")
    npts = quad_points_for(0, quad_points)
    cbar = slab_coefficient_moments(form, grid, 0, npts)[:, 0, 0]
    A = cbar[:, None, None] * form.matrix[None] + form.shift * triple.gram_H[None]
    F = slab_load_moments(f, grid, 0, triple.dim, npts)[:, 0, :]
    return SlabData(A, F, npts, form.is_constant)


@dataclass(frozen=True, eq=False)
class ThetaSolution:
    theta: float
    grid: TimeGrid
    w: np.ndarray  # (N+1, n)
    triple: Optional[SpaceTriple] = None
    residual: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != self.grid.N + 1:
            raise ConstructionError(f"expected {self.grid.N + 1} nodal vectors, got shape {w.shape}")
        _check_theta(self.theta)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.w.shape[1]

    @property
    def coefficients(self) -> np.ndarray:
        return self.w.reshape(-1)

    @property
    def start(self) -> np.ndarray:
        return self.w[0]

    @property
    def end(self) -> np.ndarray:
        return self.w[-1]

    def with_coefficients(self, c: np.ndarray) -> "ThetaSolution":
        return ThetaSolution(self.theta, self.grid, np.asarray(c).reshape(self.w.shape), self.triple)


def _check_theta(theta):
    if not (0.0 <= float(theta) <= 1.0):
        raise ConstructionError(f"theta must lie in [0, 1], got {theta!r}")


def plateaus(sol: ThetaSolution) -> np.ndarray:
    """Values inside the slabs, theta w^{m+1} + (1-theta) w^m, shape (N, n)."""
    th = sol.theta
    return th * sol.w[1:] + (1.0 - th) * sol.w[:-1]


def discrete_derivative(sol: ThetaSolution) -> np.ndarray:
    """d_m = (w^{m+1} - w^m)/k, shape (N, n)."""
    return np.diff(sol.w, axis=0) / sol.grid.k


def reconstruct(sol: ThetaSolution, t: float) -> np.ndarray:
    m, s, node = sol.grid.locate(t)
    if node:
        return sol.w[m + 1].copy() if s == 1.0 else sol.w[m].copy()
    return sol.theta * sol.w[m + 1] + (1.0 - sol.theta) * sol.w[m]


def assemble_theta_system(slabs: SlabData, theta: float, phi: ContractionMap, xi0, triple: SpaceTriple,
                          grid: TimeGrid):
    """Sparse matrix and right-hand side; row block 0 is the coupling row."""
    _check_theta(theta)
    n, N, k = triple.dim, grid.N, grid.k
    if slabs.N != N:
        raise ConstructionError("slab data and grid disagree on N")
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    if xi0.shape != (n,):
        raise ConstructionError(f"xi0 must have length {n}")
    GH = triple.gram_H
    blocks = [[None] * (N + 1) for _ in range(N + 1)]
    blocks[0][0] = sp.csr_matrix(GH)
    if phi.kind != "zero":
        blocks[0][N] = sp.csr_matrix(-phi.pairing_H) if N > 0 else None
    for m in range(N):
        Am = slabs.A_m[m]
        blocks[m + 1][m] = sp.csr_matrix(-GH / k + (1.0 - theta) * Am)
        blocks[m + 1][m + 1] = sp.csr_matrix(GH / k + theta * Am)
    S = sp.bmat(blocks, format="csr")
    b = np.concatenate([xi0, slabs.f_m.reshape(-1)])
    return S, b


def solve_theta(slabs: SlabData, theta: float, phi: ContractionMap, xi0, triple: SpaceTriple,
                grid: TimeGrid, method: str = "auto") -> ThetaSolution:
    """Solve the coupled theta-scheme.

    ``method`` is ``auto`` (marching when Phi = 0, global otherwise),
    ``global`` or ``march`` (Phi = 0 only).
    """
    S, b = assemble_theta_system(slabs, theta, phi, xi0, triple, grid)
    n, N, k = triple.dim, grid.N, grid.k
    if method == "auto":
        method = "march" if phi.kind == "zero" else "global"
    if method == "march":
        if phi.kind != "zero":
            raise ConstructionError("forward marching needs Phi = 0")
        GH = triple.gram_H
        w = np.empty((N + 1, n))
        w[0] = triple.solve_H(np.asarray(xi0, dtype=float).reshape(-1))
        lu = None
        for m in range(N):
            Am = slabs.A_m[m]
            if lu is None or not slabs.constant:
                lu = sla.lu_factor(GH / k + theta * Am)
            rhs = slabs.f_m[m] + (GH / k - (1.0 - theta) * Am) @ w[m]
            w[m + 1] = sla.lu_solve(lu, rhs)
        x = w.reshape(-1)
    elif method == "global":
        x = solve_guarded(S, b, DENSE_LIMIT, "theta-scheme")
    else:
        raise ConstructionError(f"unknown method {method!r}")
    res = certify(S, x, b, "theta-scheme")
    meta = {"method": method, "phi": phi.descriptor(), "quad_points": slabs.quad_points}
    return ThetaSolution(float(theta), grid, x.reshape(N + 1, n), triple, res, meta)


def theta_energy_terms(sol: ThetaSolution, triple: SpaceTriple, m: int = 0, m2: Optional[int] = None):
    """Both sides of the discrete energy identity on nodes m..m2.

    lhs = sum_p k <d_p, theta w^{p+1} + (1-theta) w^p>_H
    rhs = 1/2|w^{m2}|^2 + (theta - 1/2) sum_p |w^{p+1} - w^p|^2 - 1/2|w^m|^2
    """
    m2 = sol.grid.N if m2 is None else m2
    if not 0 <= m < m2 <= sol.grid.N:
        raise ConstructionError("need 0 <= m < m2 <= N")
    GH = triple.gram_H
    d = discrete_derivative(sol)[m:m2]
    p = plateaus(sol)[m:m2]
    lhs = sol.grid.k * float(np.einsum("pi,ij,pj->", d, GH, p))
    jumps = np.diff(sol.w[m:m2 + 1], axis=0)
    rhs = (0.5 * float(sol.w[m2] @ GH @ sol.w[m2]) + (sol.theta - 0.5) * float(np.einsum("pi,ij,pj->", jumps, GH, jumps))
           - 0.5 * float(sol.w[m] @ GH @ sol.w[m]))
    return lhs, rhs
