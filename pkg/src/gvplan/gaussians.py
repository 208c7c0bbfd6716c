"""Gaussian value types in moment and canonical form.

Moment form carries (mean, covariance); canonical form carries the
information vector eta = Lambda mu and the precision Lambda = Sigma^{-1}.
Both are immutable values: construction validates and symmetrizes, every
operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocktri import chol_spd, symmetrize

_LOG_2PI = float(np.log(2.0 * np.pi))
# Construction-time guard; tighter drift is averaged away by symmetrize.
_SYM_RTOL = 1e-8


def _check_symmetric(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be square, got shape {mat.shape}")
    scale = max(float(np.max(np.abs(mat))), 1.0)
    if float(np.max(np.abs(mat - mat.T))) > _SYM_RTOL * scale:
        raise ValueError(f"{what} is not symmetric")
    return symmetrize(mat)


@dataclass(frozen=True)
class GaussianMoment:
    """N(mean, cov) with cov symmetric positive definite."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = _check_symmetric(self.cov, "cov")
        if cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"mean dim {mean.shape[0]} != cov dim {cov.shape[0]}"
            )
        chol_spd(cov, "cov")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class GaussianCanonical:
    """Canonical parameters (eta, Lambda) of exp(-x'Lambda x/2 + eta'x).

    Lambda must be symmetric; positive semidefinite precisions are allowed
    (message blocks), but conversion to moment form requires SPD.
    """

    info: np.ndarray
    prec: np.ndarray

    def __post_init__(self):
        info = np.asarray(self.info, dtype=float).reshape(-1)
        prec = _check_symmetric(self.prec, "prec")
        if prec.shape[0] != info.shape[0]:
            raise ValueError(
                f"info dim {info.shape[0]} != prec dim {prec.shape[0]}"
            )
        object.__setattr__(self, "info", info)
        object.__setattr__(self, "prec", prec)

    @property
    def dim(self) -> int:
        return self.info.shape[0]


def kl_divergence(p: GaussianMoment, q: GaussianMoment) -> float:
    """KL(p || q) between Gaussians.

    0.5 * [tr(Sq^{-1} Sp) + (mq-mp)' Sq^{-1} (mq-mp) - d
           + log det Sq - log det Sp]
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    lp = chol_spd(p.cov, "p.cov")
    lq = chol_spd(q.cov, "q.cov")
    # tr(Sq^{-1} Sp) = ||Lq^{-1} Lp||_F^2
    w = np.linalg.solve(lq, lp)
    trace = float(np.sum(w * w))
    delta = np.linalg.solve(lq, q.mean - p.mean)
    mahal = float(delta @ delta)
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(lq))))
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(lp))))
    kl = 0.5 * (trace + mahal - p.dim + logdet_q - logdet_p)
    # exact-equality roundoff can land a hair below zero
    return max(kl, 0.0)


def entropy(p: GaussianMoment) -> float:
    """Differential entropy 0.5 * log det(2 pi e Sigma)."""
    low = chol_spd(p.cov, "cov")
    logdet = 2.0 * float(np.sum(np.log(np.diag(low))))
    return 0.5 * (p.dim * (_LOG_2PI + 1.0) + logdet)


def to_canonical(p: GaussianMoment) -> GaussianCanonical:
    low = chol_spd(p.cov, "cov")
    eye = np.eye(p.dim)
    inv_low = np.linalg.solve(low, eye)
    prec = inv_low.T @ inv_low
    return GaussianCanonical(info=prec @ p.mean, prec=prec)


def to_moment(c: GaussianCanonical) -> GaussianMoment:
    low = chol_spd(c.prec, "prec")
    eye = np.eye(c.dim)
    inv_low = np.linalg.solve(low, eye)
    cov = inv_low.T @ inv_low
    return GaussianMoment(mean=cov @ c.info, cov=cov)
