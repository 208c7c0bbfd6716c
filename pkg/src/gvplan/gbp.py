"""Gaussian belief propagation on the chain factor graph.

The trajectory graph is a chain, so message passing is exact after one
backward and one forward sweep. In canonical form the factor-to-variable
messages are Schur complements of the pairwise coupling blocks; assembling
beliefs and sweeping back recovers every marginal covariance block and the
adjacent cross-covariances of the joint inverse in O(N * n^3), never
forming the dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocktri import BlockTridiagonalMatrix, chol_spd, symmetrize


@dataclass(frozen=True)
class GaussianMessage:
    """Canonical-form message: information vector and PSD precision block."""

    info: np.ndarray
    prec: np.ndarray


@dataclass(frozen=True)
class ChainMarginals:
    """Per-knot covariance blocks and adjacent cross blocks of Lambda^{-1}."""

    covs: tuple[np.ndarray, ...]     # Sigma_ii, length N+1
    crosses: tuple[np.ndarray, ...]  # Sigma_{i,i+1}, length N

    def __len__(self) -> int:
        return len(self.covs)


def _solve_chol(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.linalg.solve(low.T, np.linalg.solve(low, rhs))


def gbp_marginals(prec: BlockTridiagonalMatrix) -> ChainMarginals:
    """Marginal covariance blocks of an SPD block-tridiagonal precision.

    Backward sweep: messages toward the front accumulate the trailing Schur
    complements Phi_i = D_i - U_i Phi_{i+1}^{-1} U_i'. Forward sweep turns
    beliefs into covariance blocks:

        Sigma_00      = Phi_0^{-1}
        Sigma_{i,i+1} = -Sigma_ii U_i Phi_{i+1}^{-1}
        Sigma_{i+1}   = Phi_{i+1}^{-1} + Phi_{i+1}^{-1} U_i' Sigma_ii U_i
                        Phi_{i+1}^{-1}

    Raises NotPositiveDefiniteError when a belief precision fails its
    Cholesky (invalid joint).
    """
    nb, n = prec.nblocks, prec.block_size
    eye = np.eye(n)

    back_chols: list[np.ndarray] = [None] * nb
    trailing = prec.diag[nb - 1]
    back_chols[nb - 1] = chol_spd(trailing, f"belief precision at knot {nb - 1}")
    for i in range(nb - 2, -1, -1):
        u_blk = prec.off[i]
        # message precision from the right neighbour: U Phi^{-1} U'
        w = _solve_chol(back_chols[i + 1], u_blk.T)
        trailing = prec.diag[i] - u_blk @ w
        back_chols[i] = chol_spd(symmetrize(trailing), f"belief precision at knot {i}")

    covs: list[np.ndarray] = [None] * nb
    crosses: list[np.ndarray] = [None] * (nb - 1)
    covs[0] = symmetrize(_solve_chol(back_chols[0], eye))
    for i in range(nb - 1):
        u_blk = prec.off[i]
        phi_inv = _solve_chol(back_chols[i + 1], eye)
        crosses[i] = -covs[i] @ u_blk @ phi_inv
        covs[i + 1] = symmetrize(phi_inv + phi_inv @ u_blk.T @ covs[i] @ u_blk @ phi_inv)

    return ChainMarginals(covs=tuple(covs), crosses=tuple(crosses))


def gbp_mean_solve(prec: BlockTridiagonalMatrix, info: np.ndarray) -> np.ndarray:
    """Solve Lambda mu = eta by block forward elimination / back substitution."""
    nb, n = prec.nblocks, prec.block_size
    eta = np.asarray(info, dtype=float).reshape(nb, n)

    piv_chols: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    for i in range(nb):
        d_blk = prec.diag[i]
        r_vec = eta[i].copy()
        if i > 0:
            u_prev = prec.off[i - 1]
            # eliminate x_{i-1}: subtract U' P^{-1} (U row and rhs)
            w = _solve_chol(piv_chols[i - 1], u_prev)
            d_blk = d_blk - u_prev.T @ w
            r_vec = r_vec - u_prev.T @ _solve_chol(piv_chols[i - 1], rhs[i - 1])
        piv_chols.append(chol_spd(symmetrize(d_blk), f"pivot block {i}"))
        rhs.append(r_vec)

    out = np.zeros((nb, n))
    out[nb - 1] = _solve_chol(piv_chols[nb - 1], rhs[nb - 1])
    for i in range(nb - 2, -1, -1):
        out[i] = _solve_chol(piv_chols[i], rhs[i] - prec.off[i] @ out[i + 1])
    return out.reshape(-1)


def trace_product(a: BlockTridiagonalMatrix, marg: ChainMarginals) -> float:
    """tr(A Sigma) for block-tridiagonal A given Sigma's tridiagonal blocks.

    Only the blocks of Sigma overlapping A's sparsity pattern contribute:
    tr(A Sigma) = sum_i tr(A_ii S_ii) + 2 sum_i <A_{i,i+1}, S_{i,i+1}>.
    """
    total = 0.0
    for a_blk, s_blk in zip(a.diag, marg.covs):
        total += float(np.sum(a_blk * s_blk.T))
    for a_blk, s_blk in zip(a.off, marg.crosses):
        total += 2.0 * float(np.sum(a_blk * s_blk))
    return total
