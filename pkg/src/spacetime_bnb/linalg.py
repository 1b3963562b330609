"""Linear algebra helpers: guarded global solves and residual certification."""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalError, SingularSchemeError

SINGULAR_RATIO = 1e-12
RESIDUAL_TOL = 1e-9
# below this reciprocal condition estimate we pay for an SVD to decide singularity
_RCOND_SUSPECT = 1e-8


def relative_residual(S, x: np.ndarray, b: np.ndarray) -> float:
    r = S @ x - b
    if sp.issparse(S):
        s_norm = float(abs(S).sum(axis=1).max()) if S.nnz else 0.0
    else:
        s_norm = float(np.abs(S).sum(axis=1).max())
    denom = s_norm * float(np.abs(x).max(initial=0.0)) + float(np.abs(b).max(initial=0.0))
    num = float(np.abs(r).max(initial=0.0))
    if denom == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / denom


def certify(S, x, b, what: str) -> float:
    res = relative_residual(S, x, b)
    if not res <= RESIDUAL_TOL:
        raise NumericalError(f"{what}: relative residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}")
    return res


def solve_guarded(S, b: np.ndarray, dense_limit: int, what: str = "space-time system") -> np.ndarray:
    """Solve S x = b with a singularity test.

    Dense LU up to ``dense_limit`` unknowns, sparse LU beyond.  A dense matrix
    with ``sigma_min < 1e-12 sigma_max`` raises :class:`SingularSchemeError`.
    """
    n = S.shape[0]
    if n <= dense_limit:
        A = S.toarray() if sp.issparse(S) else np.asarray(S, dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            warnings.simplefilter("ignore", RuntimeWarning)
            lu, piv = sla.lu_factor(A, check_finite=True)
            anorm = float(np.abs(A).sum(axis=0).max())
            rcond, _ = sla.lapack.dgecon(lu, anorm, norm="1")
        if not rcond > _RCOND_SUSPECT:
            sv = sla.svdvals(A)
            if sv[-1] < SINGULAR_RATIO * sv[0] or sv[0] == 0.0:
                raise SingularSchemeError(sv[-1], sv[0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            return sla.lu_solve((lu, piv), b)
    try:
        lu = spla.splu(sp.csc_matrix(S))
    except RuntimeError as exc:
        raise SingularSchemeError(0.0, float(spla.norm(S, 1)), f"sparse LU failed ({exc})") from None
    x = lu.solve(np.asarray(b, dtype=float))
    if not np.all(np.isfinite(x)):
        raise SingularSchemeError(0.0, float(spla.norm(S, 1)), "sparse LU produced non-finite values")
    return x


def whiten_pair(G: np.ndarray):
    """Lower Cholesky factor of an SPD matrix; raises NumericalError if not SPD."""
    try:
        return np.linalg.cholesky(0.5 * (G + G.T))
    except np.linalg.LinAlgError:
        raise NumericalError("Gram matrix lost positive definiteness") from None
