"""Shared generators for randomized tests (seeded, numpy PCG64)."""

import numpy as np

from gvplan.blocktri import BlockTridiagonalMatrix


def random_spd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T + n * np.eye(n))


def random_spd_block_tridiag(rng, nblocks, n):
    """SPD by construction: G G^T + I for a block-bidiagonal G."""
    dim = nblocks * n
    g = np.zeros((dim, dim))
    for i in range(nblocks):
        sl = slice(i * n, (i + 1) * n)
        g[sl, sl] = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
        if i > 0:
            g[sl, slice((i - 1) * n, i * n)] = 0.4 * rng.normal(size=(n, n))
    dense = g @ g.T + np.eye(dim)
    return BlockTridiagonalMatrix.from_dense(dense, n)


def rel_err(actual, expected):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    denom = max(float(np.max(np.abs(expected))), 1e-30)
    return float(np.max(np.abs(actual - expected))) / denom
