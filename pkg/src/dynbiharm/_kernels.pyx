# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Hermite-cubic element kernels (same contracts as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline void _shape(double xi, double h, double* v, double* d1, double* d2) noexcept nogil:
    cdef double x2 = xi * xi
    cdef double x3 = x2 * xi
    v[0] = 1.0 - 3.0 * x2 + 2.0 * x3
    v[1] = h * (xi - 2.0 * x2 + x3)
    v[2] = 3.0 * x2 - 2.0 * x3
    v[3] = h * (x3 - x2)
    d1[0] = (6.0 * x2 - 6.0 * xi) / h
    d1[1] = 1.0 - 4.0 * xi + 3.0 * x2
    d1[2] = -d1[0]
    d1[3] = 3.0 * x2 - 2.0 * xi
    d2[0] = (12.0 * xi - 6.0) / (h * h)
    d2[1] = (6.0 * xi - 4.0) / h
    d2[2] = -d2[0]
    d2[3] = (6.0 * xi - 2.0) / h


def bulk_factor(const double[::1] nodes, const double[::1] xi, const double[::1] wi, int m, double c_m):
    cdef Py_ssize_t n_e = nodes.shape[0] - 1
    cdef Py_ssize_t nq = xi.shape[0]
    cdef Py_ssize_t e, q, a, row
    cdef double h, r, s, mm = <double>(m * m)
    cdef double v[4]
    cdef double d1[4]
    cdef double d2[4]
    out_arr = np.zeros((n_e * nq, 2 * (n_e + 1)))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for e in range(n_e):
            h = nodes[e + 1] - nodes[e]
            for q in range(nq):
                r = nodes[e] + h * xi[q]
                s = sqrt(c_m * (h * wi[q]) * r)
                _shape(xi[q], h, v, d1, d2)
                row = e * nq + q
                for a in range(4):
                    out[row, 2 * e + a] = s * (d2[a] + d1[a] / r - mm * v[a] / (r * r))
    return out_arr


def bulk_mass(const double[::1] nodes, const double[::1] xi, const double[::1] wi, double c_m):
    cdef Py_ssize_t n_e = nodes.shape[0] - 1
    cdef Py_ssize_t nq = xi.shape[0]
    cdef Py_ssize_t e, q, a, b, base
    cdef double h, r, w
    cdef double v[4]
    cdef double d1[4]
    cdef double d2[4]
    cdef double local[4][4]
    out_arr = np.zeros((2 * (n_e + 1), 2 * (n_e + 1)))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for e in range(n_e):
            h = nodes[e + 1] - nodes[e]
            for a in range(4):
                for b in range(4):
                    local[a][b] = 0.0
            for q in range(nq):
                r = nodes[e] + h * xi[q]
                w = c_m * (h * wi[q]) * r
                _shape(xi[q], h, v, d1, d2)
                for a in range(4):
                    for b in range(4):
                        local[a][b] += w * v[a] * v[b]
            base = 2 * e
            for a in range(4):
                for b in range(4):
                    out[base + a, base + b] += local[a][b]
    return out_arr


def basis_matrix(const double[::1] nodes, points, int deriv=0):
    pts_arr = np.ascontiguousarray(points, dtype=np.float64).ravel()
    cdef const double[::1] pts = pts_arr
    cdef Py_ssize_t n_e = nodes.shape[0] - 1
    cdef Py_ssize_t n_pts = pts.shape[0]
    cdef Py_ssize_t i, a, e, lo, hi, mid
    cdef double h, xi, x
    cdef double v[4]
    cdef double d1[4]
    cdef double d2[4]
    cdef double* src
    if deriv not in (0, 1, 2):
        raise ValueError("deriv must be 0, 1 or 2")
    out_arr = np.zeros((n_pts, 2 * (n_e + 1)))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n_pts):
            x = pts[i]
            # last e with nodes[e] <= x, clipped to [0, n_e - 1]
            lo = 0
            hi = n_e
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if nodes[mid] <= x:
                    lo = mid
                else:
                    hi = mid
            e = lo
            h = nodes[e + 1] - nodes[e]
            xi = (x - nodes[e]) / h
            _shape(xi, h, v, d1, d2)
            if deriv == 0:
                src = v
            elif deriv == 1:
                src = d1
            else:
                src = d2
            for a in range(4):
                out[i, 2 * e + a] = src[a]
    return out_arr
