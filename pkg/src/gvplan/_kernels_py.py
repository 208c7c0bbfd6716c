"""Pure-numpy fallback for the per-factor collision expectation kernel.

Mirrors the compiled extension's contract. The ``num_threads`` argument is
accepted for interface parity and ignored: numpy reductions hold the GIL,
so the fallback always evaluates factors serially (serial and "parallel"
calls are therefore trivially identical).
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False


def factor_expectations(
    means: np.ndarray,       # (F, n)
    chols: np.ndarray,       # (F, n, n) lower Cholesky factors
    points: np.ndarray,      # (Q, n) whitened sigma points
    weights: np.ndarray,     # (Q,)
    grid: np.ndarray,        # (ny, nx) or (nz, ny, nx) signed distances
    origin: np.ndarray,
    cell_size: float,
    radius_eps: float,
    sigma_obs: float,
    pos_dim: int,
    num_threads: int = 1,
):
    """Hinge-potential quadrature moments for every factor.

    Returns (e0, e1, e2, oob_count) with
        e0[f] = sum_l W_l psi(x_l),
        e1[f] = sum_l W_l psi(x_l) (x_l - mean_f),
        e2[f] = sum_l W_l psi(x_l) (x_l - mean_f)(x_l - mean_f)^T,
    where x_l = mean_f + L_f xi_l and psi is the hinge collision cost of the
    interpolated signed distance at the position coordinates.
    """
    nfac, n = means.shape
    e0 = np.zeros(nfac)
    e1 = np.zeros((nfac, n))
    e2 = np.zeros((nfac, n, n))
    oob_total = 0
    for f in range(nfac):
        dx = points @ chols[f].T
        pos = means[f, :pos_dim] + dx[:, :pos_dim]
        dist, oob = _interp(grid, origin, cell_size, pos)
        oob_total += oob
        gap = np.maximum(radius_eps - dist, 0.0)
        wc = weights * (sigma_obs * gap * gap)
        e0[f] = float(np.sum(wc))
        e1[f] = wc @ dx
        e2[f] = dx.T @ (dx * wc[:, None])
    return e0, e1, e2, oob_total


def _interp(grid, origin, cell_size, pts):
    """Border-clamped bi-/trilinear interpolation on the raw grid array."""
    dim = grid.ndim
    coords = (pts - origin[:dim]) / cell_size
    sizes = np.array(grid.shape[::-1], dtype=float) - 1.0
    oob = int(np.sum(np.any((coords < 0) | (coords > sizes), axis=1)))
    coords = np.clip(coords, 0.0, sizes)
    base = np.maximum(np.minimum(np.floor(coords), sizes - 1.0), 0.0).astype(int)
    frac = coords - base
    if dim == 2:
        ix, iy = base[:, 0], base[:, 1]
        fx, fy = frac[:, 0], frac[:, 1]
        out = (
            grid[iy, ix] * (1 - fx) * (1 - fy)
            + grid[iy, ix + 1] * fx * (1 - fy)
            + grid[iy + 1, ix] * (1 - fx) * fy
            + grid[iy + 1, ix + 1] * fx * fy
        )
    else:
        ix, iy, iz = base[:, 0], base[:, 1], base[:, 2]
        fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
        out = np.zeros(len(pts))
        for dz in (0, 1):
            wz = fz if dz else 1 - fz
            for dy in (0, 1):
                wy = fy if dy else 1 - fy
                for dx_ in (0, 1):
                    wx = fx if dx_ else 1 - fx
                    out += grid[iz + dz, iy + dy, ix + dx_] * wx * wy * wz
    return out, oob
