"""Signed distance fields, hinge collision potentials, and rasterization.

Fields are regular grids of signed distances, positive outside obstacles.
2D values have shape (ny, nx) and 3D values (nz, ny, nx); index (iy, ix)
sits at world point origin + (ix, iy) * cell_size. Queries interpolate
bi-/trilinearly and clamp to the border outside the grid, counting the
clamped queries (quadrature sigma points of wide marginals can leave the
grid; expectations must stay finite).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_EMPTY_FIELD_VALUE = 1e6


@dataclass
class SignedDistanceField:
    origin: np.ndarray      # world coordinates of grid corner, length 2 or 3
    cell_size: float
    values: np.ndarray      # (ny, nx) or (nz, ny, nx)

    oob_count: int = field(default=0, compare=False)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(-1)
        self.values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.values.ndim not in (2, 3):
            raise ValueError("values must be a 2D or 3D grid")
        if self.origin.shape[0] != self.values.ndim:
            raise ValueError("origin dimension must match grid dimension")
        if min(self.values.shape) < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    def note_oob(self, count: int) -> None:
        if count > 0:
            self.oob_count += count
            logger.warning("%d out-of-bounds SDF queries clamped to border", count)


@dataclass(frozen=True)
class CollisionModel:
    """Hinge parameters: robot radius + safety margin, and obstacle weight."""

    radius_eps: float
    sigma_obs: float

    def __post_init__(self):
        if self.radius_eps < 0:
            raise ValueError("radius_eps must be nonnegative")
        if self.sigma_obs <= 0:
            raise ValueError("sigma_obs must be positive")


def distance(sdf: SignedDistanceField, point: np.ndarray) -> float:
    """Interpolated signed distance at a world point (border-clamped)."""
    vals, oob = distance_batch(sdf, np.asarray(point, dtype=float).reshape(1, -1))
    sdf.note_oob(oob)
    return float(vals[0])


def distance_batch(
    sdf: SignedDistanceField, points: np.ndarray
) -> tuple[np.ndarray, int]:
    """Vectorized interpolation; returns (values, clamped-query count)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != sdf.dim:
        raise ValueError(f"points must have shape (n, {sdf.dim})")
    # grid coordinates per axis, ordered (x, y[, z])
    coords = (pts - sdf.origin) / sdf.cell_size
    # values axes are reversed relative to world axes
    sizes = np.array(sdf.dims[::-1], dtype=float) - 1.0
    oob = int(np.sum(np.any((coords < 0) | (coords > sizes), axis=1)))
    coords = np.clip(coords, 0.0, sizes)

    base = np.minimum(np.floor(coords), sizes - 1.0).astype(int)
    base = np.maximum(base, 0)
    frac = coords - base

    if sdf.dim == 2:
        ix, iy = base[:, 0], base[:, 1]
        fx, fy = frac[:, 0], frac[:, 1]
        v00 = sdf.values[iy, ix]
        v01 = sdf.values[iy, ix + 1]
        v10 = sdf.values[iy + 1, ix]
        v11 = sdf.values[iy + 1, ix + 1]
        out = (
            v00 * (1 - fx) * (1 - fy)
            + v01 * fx * (1 - fy)
            + v10 * (1 - fx) * fy
            + v11 * fx * fy
        )
    else:
        ix, iy, iz = base[:, 0], base[:, 1], base[:, 2]
        fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
        out = np.zeros(len(pts))
        for dz in (0, 1):
            wz = fz if dz else 1 - fz
            for dy in (0, 1):
                wy = fy if dy else 1 - fy
                for dx in (0, 1):
                    wx = fx if dx else 1 - fx
                    out += sdf.values[iz + dz, iy + dy, ix + dx] * wx * wy * wz
    return out, oob


def hinge_cost(model: CollisionModel, dist: float) -> float:
    """sigma_obs * max(radius_eps - d, 0)^2; zero once clearance is reached."""
    gap = model.radius_eps - dist
    if gap <= 0.0:
        return 0.0
    return model.sigma_obs * gap * gap


@dataclass(frozen=True)
class Disc:
    center: np.ndarray
    radius: float

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.center, dtype=float), axis=-1) - self.radius


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    halfextents: np.ndarray

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        q = np.abs(pts - np.asarray(self.center, dtype=float)) - np.asarray(
            self.halfextents, dtype=float
        )
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside


def rasterize(primitives, bounds, cell_size: float) -> SignedDistanceField:
    """Sample the union of primitive SDFs (pointwise minimum) onto a grid.

    ``bounds`` is [[min, max]] per world axis (x, y[, z]). An empty
    primitive list gives a constant far-away field.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] not in (2, 3):
        raise ValueError("bounds must be [[min, max]] for 2 or 3 axes")
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    dim = bounds.shape[0]
    origin = bounds[:, 0]
    counts = [int(np.floor((hi - lo) / cell_size)) + 1 for lo, hi in bounds]

    axes = [origin[k] + cell_size * np.arange(counts[k]) for k in range(dim)]
    if dim == 2:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="xy")
        pts = np.stack([gx, gy], axis=-1)
    else:
        gz, gy, gx = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
        pts = np.stack([gx, gy, gz], axis=-1)

    if not primitives:
        vals = np.full(pts.shape[:-1], _EMPTY_FIELD_VALUE)
    else:
        vals = np.min(
            np.stack([prim.signed_distance(pts) for prim in primitives]), axis=0
        )
    return SignedDistanceField(origin=origin, cell_size=cell_size, values=vals)


def min_clearance(traj_means, sdf: SignedDistanceField, model: CollisionModel) -> float:
    """min over knots of (interpolated distance at the position) - radius_eps."""
    pos_dim = sdf.dim
    best = np.inf
    for state in traj_means:
        p = np.asarray(state, dtype=float).reshape(-1)[:pos_dim]
        best = min(best, distance(sdf, p) - model.radius_eps)
    return float(best)


def load_sdf(path: str) -> SignedDistanceField:
    """Read the text format: header line then row-major values.

    2D: "SDF2 <rows> <cols> <cell_size> <origin_x> <origin_y>"
    3D: "SDF3 <nz> <ny> <nx> <cell_size> <origin_x> <origin_y> <origin_z>"
    """
    with open(path) as handle:
        header = handle.readline().split()
        body = handle.read().split()
    if not header:
        raise ValueError(f"{path}: empty SDF file")
    tag = header[0]
    if tag == "SDF2":
        rows, cols = int(header[1]), int(header[2])
        cell = float(header[3])
        origin = np.array([float(header[4]), float(header[5])])
        vals = np.array([float(v) for v in body]).reshape(rows, cols)
    elif tag == "SDF3":
        nz, ny, nx = int(header[1]), int(header[2]), int(header[3])
        cell = float(header[4])
        origin = np.array([float(h) for h in header[5:8]])
        vals = np.array([float(v) for v in body]).reshape(nz, ny, nx)
    else:
        raise ValueError(f"{path}: unknown SDF header tag '{tag}'")
    return SignedDistanceField(origin=origin, cell_size=cell, values=vals)


def save_sdf(sdf: SignedDistanceField, path: str) -> None:
    origin = [float(v) for v in sdf.origin]
    with open(path, "w") as handle:
        if sdf.dim == 2:
            rows, cols = sdf.dims
            handle.write(
                f"SDF2 {rows} {cols} {float(sdf.cell_size)!r} "
                f"{origin[0]!r} {origin[1]!r}\n"
            )
        else:
            nz, ny, nx = sdf.dims
            handle.write(
                f"SDF3 {nz} {ny} {nx} {float(sdf.cell_size)!r} "
                f"{origin[0]!r} {origin[1]!r} {origin[2]!r}\n"
            )
        flat = sdf.values.reshape(sdf.dims[0], -1)
        for row in flat:
            handle.write(" ".join(repr(float(v)) for v in row) + "\n")
