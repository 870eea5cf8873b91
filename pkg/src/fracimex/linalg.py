"""Small dense LU factorisation with partial row pivoting.

The systems met in this package are tiny (state dimension, or the number
of correction terms), so a straightforward elimination is all that is
needed. Complex matrices are supported because the stability probes run
the schemes with complex coefficients.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrixError

PIVOT_FLOOR = 1e-300


def lu_factor(M):
    """Return ``(LU, perm)`` with ``M[perm] = L @ U`` stored compactly."""
    a = np.array(M, dtype=np.result_type(M, float), copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("lu_factor expects a square matrix")
    n = a.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[p, k]) > PIVOT_FLOOR:
            raise SingularMatrixError(f"pivot {abs(a[p, k]):.3e} in column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        a[k + 1 :, k] /= a[k, k]
        a[k + 1 :, k + 1 :] -= np.outer(a[k + 1 :, k], a[k, k + 1 :])
    return a, perm


def lu_solve(factors, rhs):
    """Solve with factors from :func:`lu_factor`; ``rhs`` may be 1-D or 2-D."""
    a, perm = factors
    b = np.asarray(rhs)
    x = np.array(b[perm], dtype=np.result_type(a, b), copy=True)
    n = a.shape[0]
    for i in range(1, n):
        x[i] -= a[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x


def dense_solve(M, rhs):
    """Solve ``M x = rhs`` by Gaussian elimination with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot falls below ``1e-300``.
    """
    M = np.atleast_2d(np.asarray(M))
    return lu_solve(lu_factor(M), rhs)
