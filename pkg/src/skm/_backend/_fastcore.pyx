"""Compiled inner loops: distance scans, kernel row means, mean-shift steps.

Signatures match skm._backend._numpy_impl exactly.
"""

from libc.math cimport exp, pow, sqrt

SHAPE_SQEXP = 0
SHAPE_EXP = 1
SHAPE_POWER = 2


def update_sqdist(const double[:, ::1] points, const double[::1] center,
                  double[::1] sqdist):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, diff
    for i in range(n):
        acc = 0.0
        for j in range(d):
            diff = points[i, j] - center[j]
            acc += diff * diff
        if acc < sqdist[i]:
            sqdist[i] = acc


def mean_gram(const double[:, ::1] points, const double[::1] y, int kind,
              double a, double b, double c):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double r2, diff
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown shape kind {kind}")
    for i in range(n):
        r2 = 0.0
        for j in range(d):
            diff = points[i, j] - y[j]
            r2 += diff * diff
        if kind == 0:
            acc += exp(-a * r2)
        elif kind == 1:
            acc += exp(-a * sqrt(r2))
        else:
            acc += pow(1.0 + a * r2, -b)
    return c * acc / n


def gaussian_shift_step(const double[:, ::1] support, const double[::1] alpha,
                        const double[::1] x, double a, double[::1] out):
    cdef Py_ssize_t k = support.shape[0]
    cdef Py_ssize_t d = support.shape[1]
    cdef Py_ssize_t i, j
    cdef double wsum = 0.0
    cdef double w, r2, diff
    for j in range(d):
        out[j] = 0.0
    for i in range(k):
        r2 = 0.0
        for j in range(d):
            diff = x[j] - support[i, j]
            r2 += diff * diff
        w = alpha[i] * exp(-a * r2)
        wsum += w
        for j in range(d):
            out[j] += w * support[i, j]
    return wsum
