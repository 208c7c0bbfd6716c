"""Planning factor graph: marginal maps, per-factor gradients, assembly.

Collision potentials enter the objective only through three Gaussian
expectations per factor,

    E[psi],  E[(x - mu) psi],  E[(x - mu)(x - mu)^T psi],

evaluated by sigma-point quadrature on the knot's full-state marginal (psi
reads the position coordinates, so it is constant along velocities). The
moment-form gradients are

    grad_mu    = Sigma^{-1} E[(x - mu) psi]
    grad_Sigma = -1/2 Sigma^{-1} E[psi]
                 + 1/2 Sigma^{-1} E[(x - mu)(x - mu)^T psi] Sigma^{-1}

and joint-level gradients are additive scatters of the marginal ones
through the factors' selection maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels, resolve_threads
from .blocktri import BlockTridiagonalMatrix, symmetrize
from .gaussians import GaussianMoment
from .gbp import ChainMarginals, gbp_marginals
from .quadrature import QuadratureRule, gaussian_sqrt
from .sdf import CollisionModel, SignedDistanceField


class FactorEvaluationError(RuntimeError):
    def __init__(self, factor_index: int, message: str):
        super().__init__(f"factor {factor_index}: {message}")
        self.factor_index = factor_index


@dataclass(frozen=True)
class MarginalMap:
    """Contiguous knot selection of one factor (one or two adjacent knots)."""

    factor_index: int
    first_state: int
    num_states: int = 1

    def __post_init__(self):
        if self.num_states not in (1, 2):
            raise ValueError("factors touch one knot or two adjacent knots")

    def selection_matrix(self, nblocks: int, n: int) -> np.ndarray:
        if self.first_state < 0 or self.first_state + self.num_states > nblocks:
            raise IndexError(
                f"map at state {self.first_state} outside [0, {nblocks})"
            )
        rows = self.num_states * n
        sel = np.zeros((rows, nblocks * n))
        start = self.first_state * n
        sel[np.arange(rows), start + np.arange(rows)] = 1.0
        return sel


@dataclass(frozen=True)
class FactorGradient:
    """Expected potential and its marginal moment-form gradients."""

    e_psi: float
    g_mu: np.ndarray
    g_sigma: np.ndarray


def extract_marginal(
    joint_mean: np.ndarray,
    fmap: MarginalMap,
    marg: ChainMarginals,
) -> GaussianMoment:
    """Marginal of the selected knot(s) from the joint mean and GBP blocks."""
    n = marg.covs[0].shape[0]
    nblocks = len(marg.covs)
    i = fmap.first_state
    if i < 0 or i + fmap.num_states > nblocks:
        raise IndexError(f"state index {i} outside [0, {nblocks})")
    mean = joint_mean.reshape(nblocks, n)
    if fmap.num_states == 1:
        return GaussianMoment(mean=mean[i], cov=marg.covs[i])
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = marg.covs[i]
    cov[n:, n:] = marg.covs[i + 1]
    cov[:n, n:] = marg.crosses[i]
    cov[n:, :n] = marg.crosses[i].T
    return GaussianMoment(mean=mean[i:i + 2].reshape(-1), cov=cov)


def _moment_gradients(
    e0: float, e1: np.ndarray, e2: np.ndarray, cov: np.ndarray
) -> FactorGradient:
    low = gaussian_sqrt(cov)
    eye = np.eye(cov.shape[0])
    inv_low = np.linalg.solve(low, eye)
    prec = inv_low.T @ inv_low
    g_mu = prec @ e1
    g_sigma = symmetrize(-0.5 * prec * e0 + 0.5 * prec @ e2 @ prec)
    return FactorGradient(e_psi=float(e0), g_mu=g_mu, g_sigma=g_sigma)


def potential_factor_gradients(
    marg: GaussianMoment, psi, rule: QuadratureRule
) -> FactorGradient:
    """Moment-form gradients for an arbitrary scalar potential psi(x)."""
    low = gaussian_sqrt(marg.cov)
    e0 = 0.0
    e1 = np.zeros(marg.dim)
    e2 = np.zeros((marg.dim, marg.dim))
    for xi, wt in zip(rule.points, rule.weights):
        dx = low @ xi
        val = wt * float(psi(marg.mean + dx))
        e0 += val
        e1 += val * dx
        e2 += val * np.outer(dx, dx)
    return _moment_gradients(e0, e1, e2, marg.cov)


def collision_factor_gradients(
    marg: GaussianMoment,
    sdf: SignedDistanceField,
    model: CollisionModel,
    rule: QuadratureRule,
) -> FactorGradient:
    """Hinge collision gradients for one knot marginal.

    Runs the numpy kernel on a single-factor batch so the math is identical
    to evaluate_all_factors; e_psi reports max(E[psi], 0) because sparse
    rules with signed weights can push the quadrature sum of a nonnegative
    integrand marginally below zero.
    """
    from . import _kernels_py

    low = gaussian_sqrt(marg.cov)
    e0, e1, e2, oob = _kernels_py.factor_expectations(
        marg.mean.reshape(1, -1),
        low.reshape(1, marg.dim, marg.dim),
        rule.points,
        rule.weights,
        sdf.values,
        sdf.origin,
        sdf.cell_size,
        model.radius_eps,
        model.sigma_obs,
        pos_dim=sdf.dim,
    )
    sdf.note_oob(oob)
    grad = _moment_gradients(float(e0[0]), e1[0], e2[0], marg.cov)
    return FactorGradient(
        e_psi=max(grad.e_psi, 0.0), g_mu=grad.g_mu, g_sigma=grad.g_sigma
    )


def interior_collision_maps(nblocks: int) -> list[MarginalMap]:
    """Unary collision factors at interior knots 1..N-1."""
    return [
        MarginalMap(factor_index=i, first_state=i, num_states=1)
        for i in range(1, nblocks - 1)
    ]


def evaluate_all_factors(
    joint_mean: np.ndarray,
    prec: BlockTridiagonalMatrix,
    sdf: SignedDistanceField,
    model: CollisionModel,
    rule: QuadratureRule,
    threads: int = 1,
    marginals: ChainMarginals | None = None,
    backend=None,
) -> list[FactorGradient]:
    """Collision gradients for every interior knot, factor-parallel.

    Per-factor reductions are local and sequential, so the output is
    bitwise identical for any thread count.
    """
    if marginals is None:
        marginals = gbp_marginals(prec)
    impl = backend if backend is not None else kernels
    nblocks, n = prec.nblocks, prec.block_size
    maps = interior_collision_maps(nblocks)
    nfac = len(maps)
    mean = joint_mean.reshape(nblocks, n)

    means = np.ascontiguousarray(mean[1:nblocks - 1])
    chols = np.zeros((nfac, n, n))
    for idx, fmap in enumerate(maps):
        chols[idx] = gaussian_sqrt(marginals.covs[fmap.first_state])

    e0, e1, e2, oob = impl.factor_expectations(
        means,
        chols,
        rule.points,
        rule.weights,
        sdf.values,
        sdf.origin,
        sdf.cell_size,
        model.radius_eps,
        model.sigma_obs,
        pos_dim=sdf.dim,
        num_threads=resolve_threads(threads),
    )
    sdf.note_oob(oob)

    out: list[FactorGradient] = []
    for idx, fmap in enumerate(maps):
        if not (
            np.isfinite(e0[idx])
            and np.all(np.isfinite(e1[idx]))
            and np.all(np.isfinite(e2[idx]))
        ):
            raise FactorEvaluationError(fmap.factor_index, "non-finite expectation")
        grad = _moment_gradients(float(e0[idx]), e1[idx], e2[idx],
                                 marginals.covs[fmap.first_state])
        out.append(
            FactorGradient(
                e_psi=max(grad.e_psi, 0.0), g_mu=grad.g_mu, g_sigma=grad.g_sigma
            )
        )
    return out


def assemble_joint_gradients(
    factors: list[FactorGradient],
    maps: list[MarginalMap],
    nblocks: int,
    n: int,
) -> tuple[np.ndarray, BlockTridiagonalMatrix]:
    """Scatter marginal gradients to the joint level.

    Additive scatter in ascending factor order (bit-reproducible). The
    covariance gradient stays block-tridiagonal because every map touches
    at most two adjacent knots.
    """
    if len(factors) != len(maps):
        raise ValueError("factors and maps must align")
    g_mu = np.zeros((nblocks, n))
    g_sigma = BlockTridiagonalMatrix.zeros(nblocks, n)
    for grad, fmap in zip(factors, maps):
        i = fmap.first_state
        if fmap.num_states == 1:
            g_mu[i] += grad.g_mu
            g_sigma.add_to_diag_block(i, grad.g_sigma)
        else:
            g_mu[i] += grad.g_mu[:n]
            g_mu[i + 1] += grad.g_mu[n:]
            g_sigma.add_to_diag_block(i, grad.g_sigma[:n, :n])
            g_sigma.add_to_diag_block(i + 1, grad.g_sigma[n:, n:])
            g_sigma.add_to_off_block(i, grad.g_sigma[:n, n:])
    return g_mu.reshape(-1), g_sigma
