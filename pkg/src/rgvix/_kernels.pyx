# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled filter recursions; semantics identical to rgvix._kernels_py."""

from libc.math cimport exp, fabs, sqrt

LOGH_MIN = -30.0
LOGH_MAX = 10.0

cdef double _LOGH_MIN = -30.0
cdef double _LOGH_MAX = 10.0
cdef double _H_MIN = exp(-30.0)
cdef double _H_MAX = exp(10.0)
cdef double _SQRT_2_OVER_PI = 0.7978845608028654


def rg_filter(const double[::1] r, const double[::1] logx, double lam,
              double omega, double beta, double tau1, double tau2,
              double gamma, double kappa, double phi, double delta1,
              double delta2, bint quad, double rf, double log_h1,
              double[::1] logh, double[::1] z, double[::1] u_raw):
    cdef Py_ssize_t T = r.shape[0]
    cdef Py_ssize_t t
    cdef double a0 = omega - gamma * kappa
    cdef double a1 = beta - gamma * phi
    cdef double lh = log_h1
    cdef double h, sq, zt, tz, dz
    logh[0] = lh
    for t in range(T):
        if not (_LOGH_MIN <= lh <= _LOGH_MAX):
            return t
        h = exp(lh)
        sq = sqrt(h)
        zt = (r[t] - rf - lam * sq + 0.5 * h) / sq
        if quad:
            tz = tau1 * zt + tau2 * (zt * zt - 1.0)
        else:
            tz = tau1 * zt + tau2 * (fabs(zt) - _SQRT_2_OVER_PI)
        dz = delta1 * zt + delta2 * (zt * zt - 1.0)
        z[t] = zt
        u_raw[t] = logx[t] - kappa - phi * lh - dz
        lh = a0 + a1 * lh + (tz - gamma * dz) + gamma * logx[t]
        logh[t + 1] = lh
    if not (_LOGH_MIN <= lh <= _LOGH_MAX):
        return T
    return -1


def eg_filter(const double[::1] r, double lam, double omega, double beta,
              double tau1, double tau2, bint quad, double rf, double log_h1,
              double[::1] logh, double[::1] z):
    cdef Py_ssize_t T = r.shape[0]
    cdef Py_ssize_t t
    cdef double lh = log_h1
    cdef double h, sq, zt, lev
    logh[0] = lh
    for t in range(T):
        if not (_LOGH_MIN <= lh <= _LOGH_MAX):
            return t
        h = exp(lh)
        sq = sqrt(h)
        zt = (r[t] - rf - lam * sq + 0.5 * h) / sq
        z[t] = zt
        if quad:
            lev = tau1 * zt + tau2 * (zt * zt - 1.0)
        else:
            lev = tau1 * zt + tau2 * (fabs(zt) - _SQRT_2_OVER_PI)
        lh = omega + beta * lh + lev
        logh[t + 1] = lh
    if not (_LOGH_MIN <= lh <= _LOGH_MAX):
        return T
    return -1


def g_filter(const double[::1] r, double lam, double omega, double beta,
             double alpha, double rf, double h1, double[::1] h,
             double[::1] z):
    cdef Py_ssize_t T = r.shape[0]
    cdef Py_ssize_t t
    cdef double ht = h1
    cdef double sq, zt
    h[0] = ht
    for t in range(T):
        if not (_H_MIN <= ht <= _H_MAX):
            return t
        sq = sqrt(ht)
        zt = (r[t] - rf - lam * sq + 0.5 * ht) / sq
        z[t] = zt
        ht = omega + beta * ht + alpha * ht * zt * zt
        h[t + 1] = ht
    if not (_H_MIN <= ht <= _H_MAX):
        return T
    return -1


def hn_filter(const double[::1] r, double lam, double omega, double beta,
              double alpha, double delta, double rf, double h1,
              double[::1] h, double[::1] z):
    cdef Py_ssize_t T = r.shape[0]
    cdef Py_ssize_t t
    cdef double ht = h1
    cdef double sq, zt, d
    h[0] = ht
    for t in range(T):
        if not (_H_MIN <= ht <= _H_MAX):
            return t
        sq = sqrt(ht)
        zt = (r[t] - rf - lam * ht + 0.5 * ht) / sq
        z[t] = zt
        d = zt - delta * sq
        ht = omega + beta * ht + alpha * d * d
        h[t + 1] = ht
    if not (_H_MIN <= ht <= _H_MAX):
        return T
    return -1
