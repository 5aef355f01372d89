"""Dense LU helpers shared by every solver in the package.

All linear solves go through :func:`solve_checked`, which factors with
partial pivoting, rejects numerically singular systems via a pivot-ratio
test, and attaches a 1-norm condition estimate to the result.  The estimate
is diagnostic only; no solve is refused because of a large condition number.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from .errors import SolverError

# A factorization is treated as singular when the smallest pivot magnitude
# falls below this fraction of the largest one.
PIVOT_RTOL = 1e-12


def _factor(a: np.ndarray):
    """LU-factor ``a``, returning ``(lu, piv, pivot_ratio)``.

    ``pivot_ratio`` is min|u_ii| / max|u_ii|; zero for an exactly singular
    matrix (scipy's warning about zero pivots is suppressed, the ratio test
    is the single source of truth).
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    pmax = pivots.max() if pivots.size else 0.0
    ratio = 0.0 if pmax == 0.0 else float(pivots.min() / pmax)
    return lu, piv, ratio


def _condition_estimate(a: np.ndarray, lu: np.ndarray) -> float:
    """1-norm condition estimate from an existing LU factorization."""
    gecon = get_lapack_funcs(("gecon",), (lu,))[0]
    anorm = float(np.linalg.norm(a, 1)) if a.size else 0.0
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return float("inf")
    return 1.0 / float(rcond)


def solve_checked(a: np.ndarray, b: np.ndarray, *, code: str,
                  what: str = "linear system"):
    """Solve ``a @ x = b`` with singularity detection.

    Returns ``(x, condition)``.  Raises :class:`SolverError` with the given
    ``code`` when the pivot ratio falls below :data:`PIVOT_RTOL`; the raised
    error still carries the condition estimate of the factorization.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    lu, piv, ratio = _factor(a)
    cond = _condition_estimate(a, lu)
    if ratio < PIVOT_RTOL:
        raise SolverError(
            f"{what} is numerically singular (pivot ratio {ratio:.3e})",
            code=code, condition=cond)
    x = lu_solve((lu, piv), b, check_finite=False)
    return x, cond


def invert_checked(a: np.ndarray, *, code: str, what: str = "matrix"):
    """Inverse of ``a`` with the same singularity policy as solve_checked."""
    eye = np.eye(a.shape[0], dtype=a.dtype)
    return solve_checked(a, eye, code=code, what=what)
