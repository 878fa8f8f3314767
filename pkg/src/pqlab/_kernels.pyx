# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``; same signature, same results.

Instead of one log and one exp per (k, node) term, each node carries its
current term and steps k -> k + 1 by the ratio

    exp(log_coef[k] - log_coef[k-1]) * t / (p^(n+k-1) + q^(n+k-1) p t).

A term that leaves [1e-120, 1e120] is held as mantissa * 2**exponent until
it comes back, so nothing overflows or underflows.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, pow, frexp, ldexp, floor

cnp.import_array()

cdef double _LN2 = 0.6931471805599453
cdef double _HI = 1e120
cdef double _LO = 1e-120


def kernel_sums(int n, int kmax, double p, double q, t, values, log_coef, int edge):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:, :] fv = np.asarray(values, dtype=np.float64)
    cdef const double[::1] lc = np.ascontiguousarray(log_coef, dtype=np.float64)
    cdef Py_ssize_t nj = tv.shape[0]
    cdef Py_ssize_t j, k, s
    cdef double[::1] mant = np.empty(nj)
    cdef int[::1] expo = np.empty(nj, dtype=np.intc)
    cdef double[::1] log_den = np.zeros(nj)
    cdef double[::1] pt = np.empty(nj)
    sums_arr = np.empty(kmax + 1)
    lo_arr = np.zeros(kmax + 1)
    hi_arr = np.zeros(kmax + 1)
    cdef double[::1] sums = sums_arr
    cdef double[::1] lo = lo_arr
    cdef double[::1] hi = hi_arr
    cdef double term, acc, ps, qs, step, lg, m
    cdef int e, ex
    for j in range(nj):
        pt[j] = p * tv[j]
    for s in range(n):
        ps = pow(p, <double>s)
        qs = pow(q, <double>s)
        for j in range(nj):
            log_den[j] += log(ps + qs * pt[j])
    for j in range(nj):
        lg = lc[0] + log(tv[j]) - log_den[j]
        if -276.0 < lg < 276.0:
            mant[j] = exp(lg)
            expo[j] = 0
        else:
            e = <int>floor(lg / _LN2)
            mant[j] = exp(lg - e * _LN2)
            expo[j] = e
    for k in range(kmax + 1):
        if k > 0:
            ps = pow(p, <double>(n + k - 1))
            qs = pow(q, <double>(n + k - 1)) * p
            step = exp(lc[k] - lc[k - 1])
            for j in range(nj):
                m = mant[j] * step * tv[j] / (ps + qs * tv[j])
                if m > _HI or m < _LO:
                    if m != 0.0:
                        m = frexp(m, &ex)
                        expo[j] += ex
                    _fold(&m, &expo[j])
                elif expo[j] != 0:
                    _fold(&m, &expo[j])
                mant[j] = m
        acc = 0.0
        for j in range(nj):
            if expo[j] == 0:
                acc += mant[j] * fv[k, j]
            else:
                acc += ldexp(mant[j], expo[j]) * fv[k, j]
        sums[k] = acc
        for j in range(min(edge, nj)):
            term = fabs(ldexp(mant[j], expo[j]) * fv[k, j])
            if term > lo[k]:
                lo[k] = term
            term = fabs(ldexp(mant[nj - 1 - j], expo[nj - 1 - j]) * fv[k, nj - 1 - j])
            if term > hi[k]:
                hi[k] = term
    return sums_arr, lo_arr, hi_arr


cdef inline void _fold(double* m, int* e) nogil:
    # move a scaled term back to plain form once it is in range again
    cdef double v = ldexp(m[0], e[0])
    if _LO <= v <= _HI:
        m[0] = v
        e[0] = 0
