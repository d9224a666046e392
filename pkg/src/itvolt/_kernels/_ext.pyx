# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: banded matvec, Chebyshev recurrence, Bessel table.

Mirrors itvolt._kernels._numpy; selected automatically at import when built.
Complex vectors are processed as interleaved doubles so the inner loops stay
in plain real arithmetic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, log1p

cnp.import_array()


cdef inline void _band_matvec(const double[:, ::1] bands, const double* x,
                              double* y, Py_ssize_t d, Py_ssize_t nb) noexcept nogil:
    """y = M x on interleaved (re, im) storage, M real symmetric banded."""
    cdef Py_ssize_t j, k
    cdef double e
    for j in range(d):
        e = bands[0, j]
        y[2 * j] = e * x[2 * j]
        y[2 * j + 1] = e * x[2 * j + 1]
    for k in range(1, nb):
        for j in range(d - k):
            e = bands[k, j]
            y[2 * (j + k)] += e * x[2 * j]
            y[2 * (j + k) + 1] += e * x[2 * j + 1]
            y[2 * j] += e * x[2 * (j + k)]
            y[2 * j + 1] += e * x[2 * (j + k) + 1]


def sb_matvec(const double[:, ::1] bands, x):
    cdef Py_ssize_t d = bands.shape[1]
    cdef Py_ssize_t nb = bands.shape[0]
    xa = np.ascontiguousarray(x, dtype=np.complex128)
    out = np.empty(d, dtype=np.complex128)
    cdef const double[::1] xv = xa.view(np.float64)
    cdef double[::1] yv = out.view(np.float64)
    with nogil:
        _band_matvec(bands, &xv[0], &yv[0], d, nb)
    return out


def cheb_apply(const double[:, ::1] bands, coeffs, double sigma, v):
    """sum_k coeffs[k] * phi_k(v) with phi_0 = v, phi_1 = -i*sigma*H*v,
    phi_{k+1} = -2i*sigma*H*phi_k + phi_{k-1}."""
    cdef Py_ssize_t d = bands.shape[1]
    cdef Py_ssize_t nb = bands.shape[0]
    ca = np.ascontiguousarray(coeffs, dtype=np.complex128)
    va = np.ascontiguousarray(v, dtype=np.complex128)
    cdef Py_ssize_t K = ca.shape[0]
    out = np.empty(d, dtype=np.complex128)
    cdef const double[::1] cv = ca.view(np.float64)
    cdef const double[::1] vv = va.view(np.float64)
    cdef double[::1] ov = out.view(np.float64)

    work = np.empty((3, 2 * d))
    cdef double[:, ::1] wk = work
    cdef double* prev
    cdef double* cur
    cdef double* nxt
    cdef double* tmp
    cdef double cr, ci, yr, yi
    cdef double two_sigma = 2.0 * sigma
    cdef Py_ssize_t j, n

    with nogil:
        prev = &wk[0, 0]
        cur = &wk[1, 0]
        nxt = &wk[2, 0]
        cr = cv[0]
        ci = cv[1]
        for j in range(d):
            ov[2 * j] = cr * vv[2 * j] - ci * vv[2 * j + 1]
            ov[2 * j + 1] = cr * vv[2 * j + 1] + ci * vv[2 * j]
        if K > 1:
            for j in range(2 * d):
                prev[j] = vv[j]
            # cur = -i*sigma * (H v)
            _band_matvec(bands, &vv[0], nxt, d, nb)
            for j in range(d):
                cur[2 * j] = sigma * nxt[2 * j + 1]
                cur[2 * j + 1] = -sigma * nxt[2 * j]
            cr = cv[2]
            ci = cv[3]
            for j in range(d):
                ov[2 * j] += cr * cur[2 * j] - ci * cur[2 * j + 1]
                ov[2 * j + 1] += cr * cur[2 * j + 1] + ci * cur[2 * j]
            for n in range(2, K):
                _band_matvec(bands, cur, nxt, d, nb)
                cr = cv[2 * n]
                ci = cv[2 * n + 1]
                for j in range(d):
                    yr = two_sigma * nxt[2 * j + 1] + prev[2 * j]
                    yi = -two_sigma * nxt[2 * j] + prev[2 * j + 1]
                    nxt[2 * j] = yr
                    nxt[2 * j + 1] = yi
                    ov[2 * j] += cr * yr - ci * yi
                    ov[2 * j + 1] += cr * yi + ci * yr
                tmp = prev
                prev = cur
                cur = nxt
                nxt = tmp
    return out


def bessel_j_table(double x, int max_order):
    cdef int n_out = max_order + 1
    out_arr = np.zeros(n_out)
    cdef double[::1] out = out_arr
    cdef double jp, j, jm, norm
    cdef int n, start, m
    if x < 1e-8:
        out[0] = 1.0 - 0.25 * x * x
        if n_out > 1:
            out[1] = 0.5 * x
        return out_arr
    start = max_order
    if <int>ceil(x) > start:
        start = <int>ceil(x)
    start += 15 + <int>ceil(10.0 * log1p(x))
    jp = 0.0
    j = 1e-300
    norm = 0.0
    with nogil:
        for n in range(start, 0, -1):
            jm = (2.0 * n / x) * j - jp
            jp = j
            j = jm
            if n - 1 < n_out:
                out[n - 1] = j
            if (n - 1) % 2 == 0 and n - 1 > 0:
                norm += 2.0 * j
            if fabs(j) > 1e250:
                j *= 1e-250
                jp *= 1e-250
                norm *= 1e-250
                for m in range(n_out):
                    out[m] *= 1e-250
        norm += j
        for m in range(n_out):
            out[m] /= norm
    return out_arr
