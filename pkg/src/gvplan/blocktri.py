"""Symmetric block-tridiagonal matrices.

The joint precision of a discretized trajectory distribution couples each
knot only to its temporal neighbours, so every matrix this library solves,
factorizes, or takes a log-determinant of is symmetric block-tridiagonal:
N+1 diagonal blocks of size n x n plus N super-diagonal blocks (the
sub-diagonal is the transpose). All algorithms here are O(N * n^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Cholesky pivots at or below this count as numerically non-positive.
_PIVOT_FLOOR = 1e-300


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A matrix required to be SPD failed its Cholesky factorization."""


def chol_spd(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor; raises NotPositiveDefiniteError on failure."""
    try:
        low = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc
    if np.any(np.diag(low) <= _PIVOT_FLOOR):
        raise NotPositiveDefiniteError(f"{what} has a non-positive pivot")
    return low


def is_spd(mat: np.ndarray) -> bool:
    try:
        chol_spd(mat)
        return True
    except NotPositiveDefiniteError:
        return False


def symmetrize(mat: np.ndarray) -> np.ndarray:
    """Average out floating-point asymmetry drift."""
    return 0.5 * (mat + mat.T)


@dataclass
class BlockTridiagonalMatrix:
    """Symmetric block matrix stored as diagonal and super-diagonal blocks.

    ``diag`` holds N+1 blocks of shape (n, n); ``off`` holds the N
    super-diagonal blocks, block ``off[i]`` sitting at block position
    (i, i+1). The sub-diagonal is implied by symmetry.
    """

    diag: list[np.ndarray]
    off: list[np.ndarray]

    def __post_init__(self):
        if len(self.off) != len(self.diag) - 1:
            raise ValueError(
                f"expected {len(self.diag) - 1} off blocks, got {len(self.off)}"
            )
        n = self.diag[0].shape[0]
        for blk in list(self.diag) + list(self.off):
            if blk.shape != (n, n):
                raise ValueError(f"inconsistent block shape {blk.shape}, expected {(n, n)}")

    @property
    def nblocks(self) -> int:
        return len(self.diag)

    @property
    def block_size(self) -> int:
        return self.diag[0].shape[0]

    @property
    def dim(self) -> int:
        return self.nblocks * self.block_size

    @classmethod
    def zeros(cls, nblocks: int, block_size: int) -> "BlockTridiagonalMatrix":
        return cls(
            diag=[np.zeros((block_size, block_size)) for _ in range(nblocks)],
            off=[np.zeros((block_size, block_size)) for _ in range(nblocks - 1)],
        )

    @classmethod
    def from_dense(cls, dense: np.ndarray, block_size: int) -> "BlockTridiagonalMatrix":
        n = block_size
        nb = dense.shape[0] // n
        diag = [dense[i * n:(i + 1) * n, i * n:(i + 1) * n].copy() for i in range(nb)]
        off = [dense[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n].copy() for i in range(nb - 1)]
        return cls(diag, off)

    def dense(self) -> np.ndarray:
        n, nb = self.block_size, self.nblocks
        out = np.zeros((nb * n, nb * n))
        for i, blk in enumerate(self.diag):
            out[i * n:(i + 1) * n, i * n:(i + 1) * n] = blk
        for i, blk in enumerate(self.off):
            out[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = blk
            out[(i + 1) * n:(i + 2) * n, i * n:(i + 1) * n] = blk.T
        return out

    def copy(self) -> "BlockTridiagonalMatrix":
        return BlockTridiagonalMatrix(
            [b.copy() for b in self.diag], [b.copy() for b in self.off]
        )

    def symmetrized(self) -> "BlockTridiagonalMatrix":
        return BlockTridiagonalMatrix(
            [symmetrize(b) for b in self.diag], [b.copy() for b in self.off]
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n, nb = self.block_size, self.nblocks
        xb = x.reshape(nb, n)
        out = np.zeros_like(xb)
        for i in range(nb):
            out[i] = self.diag[i] @ xb[i]
            if i > 0:
                out[i] += self.off[i - 1].T @ xb[i - 1]
            if i < nb - 1:
                out[i] += self.off[i] @ xb[i + 1]
        return out.reshape(-1)

    def quad_form(self, x: np.ndarray) -> float:
        """x^T A x without densifying."""
        return float(x @ self.matvec(x))

    def __add__(self, other: "BlockTridiagonalMatrix") -> "BlockTridiagonalMatrix":
        return BlockTridiagonalMatrix(
            [a + b for a, b in zip(self.diag, other.diag)],
            [a + b for a, b in zip(self.off, other.off)],
        )

    def scaled(self, alpha: float) -> "BlockTridiagonalMatrix":
        return BlockTridiagonalMatrix(
            [alpha * b for b in self.diag], [alpha * b for b in self.off]
        )

    def add_to_diag_block(self, i: int, blk: np.ndarray) -> None:
        self.diag[i] = self.diag[i] + blk

    def add_to_off_block(self, i: int, blk: np.ndarray) -> None:
        self.off[i] = self.off[i] + blk


def forward_schur_chols(mat: BlockTridiagonalMatrix) -> list[np.ndarray]:
    """Cholesky factors of the leading Schur pivots.

    S_0 = D_0, S_i = D_i - U_{i-1}^T S_{i-1}^{-1} U_{i-1}. These are the
    pivots of the block LDL^T factorization; the matrix is SPD iff every S_i
    is SPD, which is exactly what the per-block Cholesky enforces.
    """
    chols = []
    for i, d_blk in enumerate(mat.diag):
        s_blk = d_blk
        if i > 0:
            w = np.linalg.solve(chols[i - 1], mat.off[i - 1])
            s_blk = d_blk - w.T @ w
        chols.append(chol_spd(s_blk, f"pivot block {i}"))
    return chols


def logdet_block_tridiag(mat: BlockTridiagonalMatrix) -> float:
    """log det of an SPD block-tridiagonal matrix via block Cholesky pivots.

    Raises NotPositiveDefiniteError when a non-positive pivot is encountered.
    """
    chols = forward_schur_chols(mat)
    return 2.0 * float(sum(np.sum(np.log(np.diag(low))) for low in chols))


def is_spd_block_tridiag(mat: BlockTridiagonalMatrix) -> bool:
    try:
        forward_schur_chols(mat)
        return True
    except NotPositiveDefiniteError:
        return False
