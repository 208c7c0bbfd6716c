# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-factor collision expectation kernel.

Factors are independent: the OpenMP loop distributes whole factors across
threads while each factor's sigma-point reduction stays sequential in
ascending point index, so results are bitwise identical for any thread
count. No value-changing compiler flags (-ffast-math) are used.
"""

import numpy as np

from libc.math cimport floor
from cython.parallel cimport prange

IS_COMPILED = True


cdef inline double _interp2(const double* grid, Py_ssize_t ny, Py_ssize_t nx,
                            double ox, double oy, double cell,
                            double px, double py, long* oob) nogil:
    cdef double u = (px - ox) / cell
    cdef double v = (py - oy) / cell
    cdef bint out = 0
    if u < 0.0:
        u = 0.0; out = 1
    elif u > nx - 1.0:
        u = nx - 1.0; out = 1
    if v < 0.0:
        v = 0.0; out = 1
    elif v > ny - 1.0:
        v = ny - 1.0; out = 1
    if out:
        oob[0] += 1
    cdef Py_ssize_t ix = <Py_ssize_t>floor(u)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(v)
    if ix > nx - 2:
        ix = nx - 2
    if iy > ny - 2:
        iy = ny - 2
    cdef double fx = u - ix
    cdef double fy = v - iy
    cdef const double* row0 = grid + iy * nx + ix
    cdef const double* row1 = row0 + nx
    return (row0[0] * (1 - fx) * (1 - fy) + row0[1] * fx * (1 - fy)
            + row1[0] * (1 - fx) * fy + row1[1] * fx * fy)


cdef inline double _interp3(const double* grid, Py_ssize_t nz, Py_ssize_t ny,
                            Py_ssize_t nx, double ox, double oy, double oz,
                            double cell, double px, double py, double pz,
                            long* oob) nogil:
    cdef double u = (px - ox) / cell
    cdef double v = (py - oy) / cell
    cdef double w = (pz - oz) / cell
    cdef bint out = 0
    if u < 0.0:
        u = 0.0; out = 1
    elif u > nx - 1.0:
        u = nx - 1.0; out = 1
    if v < 0.0:
        v = 0.0; out = 1
    elif v > ny - 1.0:
        v = ny - 1.0; out = 1
    if w < 0.0:
        w = 0.0; out = 1
    elif w > nz - 1.0:
        w = nz - 1.0; out = 1
    if out:
        oob[0] += 1
    cdef Py_ssize_t ix = <Py_ssize_t>floor(u)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(v)
    cdef Py_ssize_t iz = <Py_ssize_t>floor(w)
    if ix > nx - 2:
        ix = nx - 2
    if iy > ny - 2:
        iy = ny - 2
    if iz > nz - 2:
        iz = nz - 2
    cdef double fx = u - ix
    cdef double fy = v - iy
    cdef double fz = w - iz
    cdef const double* c00 = grid + (iz * ny + iy) * nx + ix
    cdef const double* c01 = c00 + nx
    cdef const double* c10 = c00 + ny * nx
    cdef const double* c11 = c10 + nx
    cdef double v0 = (c00[0] * (1 - fx) * (1 - fy) + c00[1] * fx * (1 - fy)
                      + c01[0] * (1 - fx) * fy + c01[1] * fx * fy)
    cdef double v1 = (c10[0] * (1 - fx) * (1 - fy) + c10[1] * fx * (1 - fy)
                      + c11[0] * (1 - fx) * fy + c11[1] * fx * fy)
    return v0 * (1 - fz) + v1 * fz


cdef void _one_factor(Py_ssize_t f, const double[:, ::1] means,
                      const double[:, :, ::1] chols,
                      const double[:, ::1] points, const double[::1] weights,
                      const double* grid, int gdim,
                      Py_ssize_t n0, Py_ssize_t n1, Py_ssize_t n2,
                      double ox, double oy, double oz, double cell,
                      double radius_eps, double sigma_obs, int pos_dim,
                      double[:, ::1] dxbuf,
                      double[::1] e0, double[:, ::1] e1,
                      double[:, :, ::1] e2, long[::1] oob) nogil:
    cdef Py_ssize_t n = means.shape[1]
    cdef Py_ssize_t nq = points.shape[0]
    cdef Py_ssize_t l, j, k
    cdef double acc, px, py, pz, dist, gap, wc
    for l in range(nq):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += chols[f, j, k] * points[l, k]
            dxbuf[f, j] = acc
        px = means[f, 0] + dxbuf[f, 0]
        py = means[f, 1] + dxbuf[f, 1]
        if gdim == 2:
            dist = _interp2(grid, n0, n1, ox, oy, cell, px, py, &oob[f])
        else:
            pz = means[f, 2] + dxbuf[f, 2]
            dist = _interp3(grid, n0, n1, n2, ox, oy, oz, cell, px, py, pz,
                            &oob[f])
        gap = radius_eps - dist
        if gap > 0.0:
            wc = weights[l] * sigma_obs * gap * gap
            e0[f] += wc
            for j in range(n):
                e1[f, j] += wc * dxbuf[f, j]
            for j in range(n):
                for k in range(n):
                    e2[f, j, k] += wc * dxbuf[f, j] * dxbuf[f, k]


def factor_expectations(double[:, ::1] means, double[:, :, ::1] chols,
                        double[:, ::1] points, double[::1] weights,
                        grid_arr, origin_arr, double cell_size,
                        double radius_eps, double sigma_obs,
                        int pos_dim, int num_threads=1):
    """Hinge-potential quadrature moments for every factor (see fallback)."""
    cdef Py_ssize_t nfac = means.shape[0]
    cdef Py_ssize_t n = means.shape[1]
    grid_c = np.ascontiguousarray(grid_arr, dtype=np.float64)
    origin = np.asarray(origin_arr, dtype=np.float64).reshape(-1)
    cdef int gdim = grid_c.ndim
    cdef Py_ssize_t n0 = grid_c.shape[0]
    cdef Py_ssize_t n1 = grid_c.shape[1]
    cdef Py_ssize_t n2 = grid_c.shape[2] if gdim == 3 else 1
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2] if gdim == 3 else 0.0
    # grid axes in memory are (ny, nx) or (nz, ny, nx); interp wants x fastest
    cdef double[::1] gflat = grid_c.reshape(-1)

    e0_arr = np.zeros(nfac)
    e1_arr = np.zeros((nfac, n))
    e2_arr = np.zeros((nfac, n, n))
    oob_arr = np.zeros(nfac, dtype=np.int64)
    dx_arr = np.zeros((nfac, n))
    cdef double[::1] e0 = e0_arr
    cdef double[:, ::1] e1 = e1_arr
    cdef double[:, :, ::1] e2 = e2_arr
    cdef long[::1] oob = oob_arr
    cdef double[:, ::1] dxbuf = dx_arr

    cdef int nt = num_threads if num_threads > 0 else 1
    cdef Py_ssize_t f
    if nt == 1:
        with nogil:
            for f in range(nfac):
                _one_factor(f, means, chols, points, weights, &gflat[0], gdim,
                            n0, n1, n2, ox, oy, oz, cell_size, radius_eps,
                            sigma_obs, pos_dim, dxbuf, e0, e1, e2, oob)
    else:
        for f in prange(nfac, nogil=True, schedule='static', num_threads=nt):
            _one_factor(f, means, chols, points, weights, &gflat[0], gdim,
                        n0, n1, n2, ox, oy, oz, cell_size, radius_eps,
                        sigma_obs, pos_dim, dxbuf, e0, e1, e2, oob)

    return e0_arr, e1_arr, e2_arr, int(oob_arr.sum())
