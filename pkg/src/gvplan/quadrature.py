"""Gauss-Hermite sigma-point rules for Gaussian expectations.

All rules integrate against the standard normal measure N(0, I_d): points
live in whitened space and weights sum to one. ``expect`` maps them through
an affine transform to integrate against an arbitrary N(m, P).

Three constructions are provided:
  * 1D probabilists' Gauss-Hermite rules (p points, exact to degree 2p-1),
  * full tensor products (exponential point count in the dimension),
  * Smolyak sparse grids (polynomial point count, exact for all monomials
    of total degree <= 2*k_q - 1).

Smolyak weights can be negative; only the normalization sum(W) = 1 may be
assumed downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

_MAX_1D_ORDER = 64
_TENSOR_SIZE_GUARD = 10**7
_SQRT_JITTER = 1e-10


@dataclass(frozen=True)
class QuadratureRule:
    """Sigma points (in N(0, I) space) with weights and an exactness degree."""

    points: np.ndarray  # (npoints, dim)
    weights: np.ndarray  # (npoints,)
    exact_degree: int

    def __post_init__(self):
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(self.points, dtype=float)))
        wts = np.ascontiguousarray(np.asarray(self.weights, dtype=float).reshape(-1))
        if pts.shape[0] != wts.shape[0]:
            raise ValueError("points and weights length mismatch")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def npoints(self) -> int:
        return self.points.shape[0]


def hermite_rule_1d(p: int) -> QuadratureRule:
    """p-point probabilists' Gauss-Hermite rule for N(0, 1).

    Nodes are the roots of He_p; weights are the standard Gauss-Hermite
    weights normalized to the Gaussian measure (they sum to one). Exact for
    monomials x^k, k <= 2p - 1.
    """
    if not 1 <= p <= _MAX_1D_ORDER:
        raise ValueError(f"order p={p} outside [1, {_MAX_1D_ORDER}]")
    nodes, weights = hermegauss(p)
    weights = weights / np.sqrt(2.0 * np.pi)
    return QuadratureRule(nodes.reshape(-1, 1), weights, exact_degree=2 * p - 1)


def tensor_rule(p: int, d: int) -> QuadratureRule:
    """Full tensor product of d copies of the p-point 1D rule (p^d points)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if p**d > _TENSOR_SIZE_GUARD:
        raise ValueError(f"tensor rule size {p}^{d} exceeds guard {_TENSOR_SIZE_GUARD}")
    base = hermite_rule_1d(p)
    points, weights = _tensor_product([base] * d)
    return QuadratureRule(points, weights, exact_degree=2 * p - 1)


def _tensor_product(rules_1d: list[QuadratureRule]) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*[r.points[:, 0] for r in rules_1d], indexing="ij")
    points = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = rules_1d[0].weights
    for r in rules_1d[1:]:
        weights = np.multiply.outer(weights, r.weights).reshape(-1)
    return points, weights


def smolyak_rule(k_q: int, d: int) -> QuadratureRule:
    """Sparse Smolyak grid exact for total polynomial degree <= 2*k_q - 1.

    Classical combination technique over non-nested 1D Gauss-Hermite rules
    with linear growth (level l uses l points, exact to degree 2l - 1):

        A(q, d) = sum_{q-d+1 <= |l| <= q} (-1)^{q-|l|} C(d-1, q-|l|)
                  (U_{l_1} x ... x U_{l_d}),   q = d + k_q - 1.

    Points coinciding within 1e-12 are merged and their weights summed.
    """
    if k_q < 1:
        raise ValueError("level k_q must be >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    q = d + k_q - 1
    rules_1d = {lev: hermite_rule_1d(lev) for lev in range(1, k_q + 1)}

    merged: dict[tuple, tuple[np.ndarray, float]] = {}
    for levels in _level_multi_indices(d, k_q):
        total = sum(levels)
        coeff = (-1) ** (q - total) * comb(d - 1, q - total)
        if coeff == 0:
            continue
        points, weights = _tensor_product([rules_1d[lev] for lev in levels])
        weights = coeff * weights
        keys = np.round(points, 12)
        for key_row, pt, wt in zip(keys, points, weights):
            key = tuple(key_row)
            if key in merged:
                old_pt, old_wt = merged[key]
                merged[key] = (old_pt, old_wt + wt)
            else:
                merged[key] = (pt, wt)

    # canonical ordering for reproducibility across runs
    items = sorted(merged.items(), key=lambda kv: kv[0])
    points = np.array([pt for _, (pt, _) in items])
    weights = np.array([wt for _, (_, wt) in items])
    keep = np.abs(weights) > 1e-15
    return QuadratureRule(points[keep], weights[keep], exact_degree=2 * k_q - 1)


def _level_multi_indices(d: int, k_q: int):
    """All level vectors l in {1..k_q}^d with |l| <= d + k_q - 1.

    Enumerated by distributing the level surplus (at most k_q - 1) over the
    dimensions, so the cost is polynomial in d rather than k_q^d.
    """

    def surpluses(slots: int, budget: int):
        if slots == 1:
            for s in range(budget + 1):
                yield (s,)
            return
        for s in range(budget + 1):
            for rest in surpluses(slots - 1, budget - s):
                yield (s,) + rest

    for surplus in surpluses(d, k_q - 1):
        yield tuple(s + 1 for s in surplus)


def smolyak_point_bound(k_q: int, d: int) -> float:
    """Growth bound e^{k_q} / (k_q - 1)! * d^{k_q} on the sparse-grid size."""
    return float(np.exp(k_q) / _factorial(k_q - 1) * d**k_q)


def _factorial(k: int) -> float:
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


def gaussian_sqrt(cov: np.ndarray) -> np.ndarray:
    """Matrix square root L with L L^T = P for sigma-point transforms.

    Cholesky when possible; after a 1e-10 jitter retry, falls back to the
    symmetric eigendecomposition root with eigenvalues floored at zero
    (near-singular marginals late in an optimization).
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(cov + _SQRT_JITTER * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def expect(rule: QuadratureRule, func, mean: np.ndarray, cov: np.ndarray):
    """Quadrature approximation of E[func(x)] under x ~ N(mean, cov).

    Evaluates func at L xi_l + mean with L L^T = cov and reduces
    sum_l W_l func(.) in ascending point index (bit-reproducible). func may
    return scalars, vectors, or matrices.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    if mean.shape[0] != rule.dim:
        raise ValueError(f"mean dim {mean.shape[0]} != rule dim {rule.dim}")
    low = gaussian_sqrt(cov)
    acc = None
    for xi, wt in zip(rule.points, rule.weights):
        val = np.asarray(func(mean + low @ xi), dtype=float)
        acc = wt * val if acc is None else acc + wt * val
    if acc.ndim == 0:
        return float(acc)
    return acc
