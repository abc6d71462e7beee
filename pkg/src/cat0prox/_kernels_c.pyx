# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled metric kernels; function-for-function mirror of _kernels_py."""

import numpy as np

from libc.math cimport sqrt, fabs, sinh, acosh

BACKEND = "compiled"

EUCLIDEAN = 0
HYPERBOLOID = 1
SPIDER = 2

DEF K_EUCLIDEAN = 0
DEF K_HYPERBOLOID = 1
DEF K_SPIDER = 2


cdef inline double _dist(int kind, const double[::1] x, const double[::1] y) noexcept nogil:
    cdef double s, d, m
    cdef Py_ssize_t i, n = x.shape[0]
    if kind == K_EUCLIDEAN:
        s = 0.0
        for i in range(n):
            d = x[i] - y[i]
            s += d * d
        return sqrt(s)
    if kind == K_HYPERBOLOID:
        m = x[0] * y[0]
        for i in range(1, n):
            m -= x[i] * y[i]
        if m < 1.0:
            m = 1.0
        return acosh(m)
    # spider
    if x[0] == y[0]:
        return fabs(x[1] - y[1])
    return x[1] + y[1]


cdef inline int _geodesic(int kind, const double[::1] x, const double[::1] y,
                          double t, double[::1] out) except -1 nogil:
    cdef double d, sd, a, b, m, scale, rx, ry, r, s, total
    cdef Py_ssize_t i, n = x.shape[0]
    if t == 0.0:
        for i in range(n):
            out[i] = x[i]
        return 0
    if t == 1.0:
        for i in range(n):
            out[i] = y[i]
        return 0
    if kind == K_EUCLIDEAN:
        for i in range(n):
            out[i] = (1.0 - t) * x[i] + t * y[i]
        return 0
    if kind == K_HYPERBOLOID:
        d = _dist(kind, x, y)
        if d == 0.0:
            for i in range(n):
                out[i] = x[i]
            return 0
        sd = sinh(d)
        a = sinh((1.0 - t) * d) / sd
        b = sinh(t * d) / sd
        for i in range(n):
            out[i] = a * x[i] + b * y[i]
        m = out[0] * out[0]
        for i in range(1, n):
            m -= out[i] * out[i]
        scale = 1.0 / sqrt(m)
        for i in range(n):
            out[i] *= scale
        return 0
    # spider
    rx = x[1]
    ry = y[1]
    if x[0] == y[0]:
        r = (1.0 - t) * rx + t * ry
        if r < 0.0:
            with gil:
                raise ValueError("spider geodesic extension runs through the hub")
        out[0] = x[0] if r > 0.0 else 0.0
        out[1] = r
        return 0
    total = rx + ry
    s = t * total
    if s < 0.0:
        with gil:
            raise ValueError("spider geodesic extension runs through the hub")
    if s < rx:
        out[0] = x[0]
        out[1] = rx - s
    elif s == rx:
        out[0] = 0.0
        out[1] = 0.0
    else:
        out[0] = y[0]
        out[1] = s - rx
    return 0


def dist_scalar(int kind, const double[::1] x, const double[::1] y):
    return _dist(kind, x, y)


def geodesic_scalar(int kind, const double[::1] x, const double[::1] y, double t):
    out = np.empty(x.shape[0])
    cdef double[::1] o = out
    _geodesic(kind, x, y, t, o)
    return out


def dist_rows(int kind, const double[:, ::1] X, const double[:, ::1] Y):
    cdef Py_ssize_t i, n = X.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _dist(kind, X[i], Y[i])
    return out


def dist_one_many(int kind, const double[::1] x, const double[:, ::1] Y):
    cdef Py_ssize_t i, n = Y.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _dist(kind, x, Y[i])
    return out


def dist_sq_block_accum(int kind, const double[:, ::1] A, const double[:, ::1] B,
                        double[:, ::1] acc):
    cdef Py_ssize_t i, j, m = A.shape[0], n = B.shape[0]
    cdef double d
    with nogil:
        for i in range(m):
            for j in range(n):
                d = _dist(kind, A[i], B[j])
                acc[i, j] += d * d


def max_pairwise_sq(int kind, const double[:, ::1] X):
    cdef Py_ssize_t i, j, n = X.shape[0]
    cdef double best = 0.0, d
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                d = _dist(kind, X[i], X[j])
                if d * d > best:
                    best = d * d
    return best


def geodesic_rows(int kind, const double[:, ::1] X, const double[:, ::1] Y,
                  const double[::1] T):
    cdef Py_ssize_t i, n = X.shape[0]
    out = np.empty((n, X.shape[1]))
    cdef double[:, ::1] o = out
    for i in range(n):
        _geodesic(kind, X[i], Y[i], T[i], o[i])
    return out
