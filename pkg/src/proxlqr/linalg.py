"""Thin wrappers around the LAPACK factorizations used by the solver."""

from __future__ import annotations

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve
from scipy.linalg.lapack import _compute_lwork


class SingularMatrix(np.linalg.LinAlgError):
    """Raised when a factorization detects exact rank deficiency."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


class SymmetricFactor:
    """Bunch-Kaufman factorization of a symmetric (possibly indefinite) matrix.

    Factor once, solve for many right-hand sides.  Raises SingularMatrix when
    LAPACK reports an exactly singular pivot block.
    """

    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"expected square matrix, got shape {a.shape}")
        self.n = n
        if n == 0:
            return
        sytrf, sytrf_lwork = get_lapack_funcs(("sytrf", "sytrf_lwork"), (a,))
        lwork = _compute_lwork(sytrf_lwork, n, lower=1)
        ldu, ipiv, info = sytrf(a, lower=1, lwork=lwork)
        if info > 0:
            raise SingularMatrix(f"zero pivot at index {info - 1}")
        if info < 0:
            raise ValueError(f"sytrf: illegal argument {-info}")
        self._ldu = ldu
        self._ipiv = ipiv
        self._sytrs = get_lapack_funcs("sytrs", (a,))

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.n == 0:
            return b.copy()
        vector = b.ndim == 1
        rhs = b[:, None] if vector else b
        if rhs.shape[0] != self.n:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {self.n}")
        if rhs.shape[1] == 0:
            return b.copy()
        x, info = self._sytrs(self._ldu, self._ipiv, rhs, lower=1)
        if info != 0:
            raise ValueError(f"sytrs: illegal argument {-info}")
        return x[:, 0] if vector else x


class LuFactor:
    """Partial-pivoting LU of a general square matrix, with singularity check."""

    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"expected square matrix, got shape {a.shape}")
        self.n = n
        if n == 0:
            self._lu = None
            return
        with np.errstate(all="ignore"):
            lu, piv = lu_factor(a, check_finite=False)
        diag = np.abs(np.diag(lu))
        if not np.all(np.isfinite(lu)) or diag.min() == 0.0:
            raise SingularMatrix("LU factorization detected a zero pivot")
        self._lu = (lu, piv)

    def solve(self, b: np.ndarray, trans: int = 0) -> np.ndarray:
        """Solve A x = b (trans=0) or A^T x = b (trans=1)."""
        b = np.asarray(b, dtype=float)
        if self.n == 0:
            return b.copy()
        if b.shape[0] != self.n:
            raise ValueError(f"rhs has {b.shape[0]} rows, expected {self.n}")
        if b.ndim == 2 and b.shape[1] == 0:
            return b.copy()
        return lu_solve(self._lu, b, trans=trans, check_finite=False)


def solve_symmetric(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One-shot symmetric-indefinite solve."""
    return SymmetricFactor(a).solve(b)
