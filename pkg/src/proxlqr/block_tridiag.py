"""Symmetric block-tridiagonal solver via a back-to-front block UDU' sweep.

The matrix has symmetric diagonal blocks A_0..A_K (possibly of different
sizes, possibly indefinite) and superdiagonal blocks B_1..B_K with
B_{i+1} coupling blocks i and i+1.  The factorization prescribes

    D_K = A_K,    U_{i+1} D_{i+1} = B_{i+1},
    D_i = A_i - B_{i+1} D_{i+1}^{-1} B_{i+1}'

with each D_i held in Bunch-Kaufman factored form, after which M X = C is
solved by one backward and one forward substitution per block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularDiagonalBlock
from .linalg import SingularMatrix, SymmetricFactor, symmetrize


@dataclass
class BlockTridiag:
    """diag[i] is A_i (n_i x n_i symmetric); sup[i] is B_{i+1} (n_i x n_{i+1})."""

    diag: list[np.ndarray]
    sup: list[np.ndarray]

    def __post_init__(self):
        self.diag = [np.asarray(a, dtype=float) for a in self.diag]
        self.sup = [np.asarray(b, dtype=float) for b in self.sup]
        if len(self.sup) != len(self.diag) - 1:
            raise DimensionMismatch(
                f"{len(self.diag)} diagonal blocks need {len(self.diag) - 1} "
                f"superdiagonal blocks, got {len(self.sup)}"
            )
        for i, a in enumerate(self.diag):
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DimensionMismatch(f"diagonal block {i} is not square")
        for i, b in enumerate(self.sup):
            want = (self.diag[i].shape[0], self.diag[i + 1].shape[0])
            if b.shape != want:
                raise DimensionMismatch(
                    f"superdiagonal block {i} has shape {b.shape}, expected {want}"
                )

    @property
    def nblocks(self) -> int:
        return len(self.diag)

    @property
    def sizes(self) -> list[int]:
        return [a.shape[0] for a in self.diag]

    def to_dense(self) -> np.ndarray:
        n = sum(self.sizes)
        out = np.zeros((n, n))
        offs = np.concatenate([[0], np.cumsum(self.sizes)])
        for i, a in enumerate(self.diag):
            out[offs[i] : offs[i + 1], offs[i] : offs[i + 1]] = a
        for i, b in enumerate(self.sup):
            out[offs[i] : offs[i + 1], offs[i + 1] : offs[i + 2]] = b
            out[offs[i + 1] : offs[i + 2], offs[i] : offs[i + 1]] = b.T
        return out


@dataclass
class BlockTridiagFactor:
    """Result of factor_udut: U blocks, Schur-complemented D blocks and their
    factorizations."""

    m: BlockTridiag
    U: list[np.ndarray]
    D: list[np.ndarray]
    _factors: list[SymmetricFactor]


def factor_udut(m: BlockTridiag) -> BlockTridiagFactor:
    """Back-to-front elimination producing M = U D U'."""
    K = m.nblocks - 1
    D: list[np.ndarray | None] = [None] * (K + 1)
    U: list[np.ndarray | None] = [None] * K
    factors: list[SymmetricFactor | None] = [None] * (K + 1)
    D[K] = symmetrize(m.diag[K])
    factors[K] = _factor_block(D[K], K)
    for i in range(K - 1, -1, -1):
        # U_{i+1} = B_{i+1} D_{i+1}^{-1}; solve on the transpose since D is symmetric
        U[i] = factors[i + 1].solve(m.sup[i].T).T
        D[i] = symmetrize(m.diag[i] - U[i] @ m.sup[i].T)
        factors[i] = _factor_block(D[i], i)
    return BlockTridiagFactor(m=m, U=U, D=D, _factors=factors)


def _factor_block(d: np.ndarray, i: int) -> SymmetricFactor:
    try:
        return SymmetricFactor(d)
    except SingularMatrix as exc:
        raise SingularDiagonalBlock(
            f"Schur-complemented diagonal block {i} is singular", block=i
        ) from exc


def solve(factor: BlockTridiagFactor, rhs: list[np.ndarray]) -> list[np.ndarray]:
    """Solve M X = C for stacked block right-hand sides (vectors or matrices)."""
    m = factor.m
    K = m.nblocks - 1
    if len(rhs) != K + 1:
        raise DimensionMismatch(f"expected {K + 1} rhs blocks, got {len(rhs)}")
    rhs = [np.asarray(c, dtype=float) for c in rhs]
    for i, c in enumerate(rhs):
        if c.shape[0] != m.sizes[i]:
            raise DimensionMismatch(
                f"rhs block {i} has {c.shape[0]} rows, expected {m.sizes[i]}"
            )
    Z: list[np.ndarray | None] = [None] * (K + 1)
    Z[K] = factor._factors[K].solve(rhs[K])
    for i in range(K - 1, -1, -1):
        Z[i] = factor._factors[i].solve(rhs[i] - m.sup[i] @ Z[i + 1])
    X: list[np.ndarray | None] = [None] * (K + 1)
    X[0] = Z[0]
    for i in range(K):
        X[i + 1] = Z[i + 1] - factor.U[i].T @ X[i]
    return X


def solve_dense_oracle(m: BlockTridiag, rhs: list[np.ndarray]) -> list[np.ndarray]:
    """Reference solve through the assembled dense matrix (tests only)."""
    dense = m.to_dense()
    flat = np.concatenate([np.atleast_1d(c) for c in rhs], axis=0)
    x = np.linalg.solve(dense, flat)
    out, pos = [], 0
    for n in m.sizes:
        out.append(x[pos : pos + n])
        pos += n
    return out
