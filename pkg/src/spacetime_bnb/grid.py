"""Uniform time grids and slab quadrature shared by both schemes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConstructionError, NumericalError
from .triple import gauss_legendre01

# Gauss points per slab for time integrals of data (f and a smooth coefficient c(t)).
# The minimum needed for degree-q slabs is q + 2; smooth data wants more.
DATA_QUAD_POINTS = 10


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConstructionError("T must be a positive finite number")
        if int(self.N) != self.N or self.N < 1:
            raise ConstructionError("N must be a positive integer")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))

    @property
    def k(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return self.k * np.arange(self.N + 1)

    def slab_start(self, m: int) -> float:
        """Left end of slab m (0-based)."""
        return m * self.k

    def locate(self, t: float) -> tuple[int, float, bool]:
        """Return (slab index, local coordinate s in [0,1], is_node).

        For a node t = m k the slab index is m (the slab to the right) except
        at t = T where it is N - 1 with s = 1.
        """
        if not (-1e-14 * self.T <= t <= self.T * (1 + 1e-14)):
            raise ConstructionError(f"t={t!r} outside [0, {self.T!r}]")
        r = t / self.k
        m = int(round(r))
        if abs(r - m) <= 8 * np.finfo(float).eps * max(1.0, r):
            if m >= self.N:
                return self.N - 1, 1.0, True
            return m, 0.0, True
        m = min(int(math.floor(r)), self.N - 1)
        return m, r - m, False

    def to_dict(self) -> dict:
        return {"T": self.T, "N": self.N, "k": self.k}


def quad_points_for(q: int, requested: Optional[int] = None) -> int:
    return max(q + 2, requested or DATA_QUAD_POINTS)


def evaluate_load(f: Optional[Callable], t: float, dim: int) -> np.ndarray:
    if f is None:
        return np.zeros(dim)
    v = np.asarray(f(float(t)), dtype=float).reshape(-1)
    if v.shape != (dim,):
        raise ConstructionError(f"load function returned shape {v.shape}, expected ({dim},)")
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"non-finite load at t={t!r}")
    return v


def slab_load_moments(f: Optional[Callable], grid: TimeGrid, q: int, dim: int,
                      n_points: Optional[int] = None) -> np.ndarray:
    """``out[m, j] = int_0^1 s**j f(t_m + k s) ds`` (shape (N, q+1, dim))."""
    out = np.zeros((grid.N, q + 1, dim))
    if f is None:
        return out
    s, w = gauss_legendre01(quad_points_for(q, n_points))
    powers = s[None, :] ** np.arange(q + 1)[:, None] * w[None, :]  # (q+1, P)
    for m in range(grid.N):
        t0 = grid.slab_start(m)
        F = np.stack([evaluate_load(f, t0 + grid.k * sp, dim) for sp in s])  # (P, dim)
        out[m] = powers @ F
    return out


def slab_coefficient_moments(form, grid: TimeGrid, q: int, n_points: Optional[int] = None) -> np.ndarray:
    """``out[m, j, i] = int_0^1 c(t_m + k s) s**(i+j) ds`` (shape (N, q+1, q+1))."""
    i = np.arange(q + 1)
    hil = 1.0 / (i[:, None] + i[None, :] + 1.0)
    if form.is_constant:
        return np.broadcast_to(hil, (grid.N, q + 1, q + 1)).copy()
    s, w = gauss_legendre01(quad_points_for(q, n_points))
    V = s[None, :] ** i[:, None]
    out = np.empty((grid.N, q + 1, q + 1))
    for m in range(grid.N):
        c = form.coefficient_values(grid.slab_start(m) + grid.k * s)
        out[m] = (V * (w * c)) @ V.T
    return out
