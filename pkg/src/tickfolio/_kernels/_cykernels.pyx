# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled model recursions. Must stay operation-for-operation identical to
_pykernels so both backends produce bit-identical output."""

from libc.math cimport exp, fabs, log, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

SQRT_2_OVER_PI = 0.7978845608028654
LN_SIGMA2_MAX = 700.0

cdef double _SQRT_2_OVER_PI = 0.7978845608028654
cdef double _LN_SIGMA2_MAX = 700.0


def arma_residuals(x, double delta, phi, theta, double presample):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t p = ph.shape[0]
    cdef Py_ssize_t q = th.shape[0]
    cdef Py_ssize_t n = xs.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] eps = out
    cdef Py_ssize_t t, i, j, lag
    cdef double acc
    for t in range(n):
        acc = xs[t] - delta
        for i in range(p):
            lag = t - 1 - i
            if lag >= 0:
                acc -= ph[i] * xs[lag]
            else:
                acc -= ph[i] * presample
        for j in range(q):
            lag = t - 1 - j
            if lag >= 0:
                acc += th[j] * eps[lag]
        eps[t] = acc
    return out


def kalman_arma_loglik(y, phi_pad, r_vec, p0):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] phi = np.ascontiguousarray(phi_pad, dtype=np.float64)
    cdef double[::1] r = np.ascontiguousarray(r_vec, dtype=np.float64)
    cdef double[:, ::1] P = np.array(p0, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t m = phi.shape[0]
    cdef Py_ssize_t n = ys.shape[0]
    cdef double[::1] a = np.zeros(m, dtype=np.float64)
    cdef double[::1] ta = np.zeros(m, dtype=np.float64)
    cdef double[::1] k = np.zeros(m, dtype=np.float64)
    cdef double[:, ::1] rr = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] TP = np.zeros((m, m), dtype=np.float64)
    cdef Py_ssize_t t, i, j
    cdef double f, v, ssq, sumlogf, nxt
    for i in range(m):
        for j in range(m):
            rr[i, j] = r[i] * r[j]
    cdef double log_f = 0.0
    cdef double f_prev = -1.0
    cdef bint steady = 0
    ssq = 0.0
    sumlogf = 0.0
    for t in range(n):
        f = P[0, 0]
        if not (f > 1e-300):
            return 0.0, 0.0, 0.0
        v = ys[t] - a[0]
        ssq += v * v / f
        if not steady:
            log_f = log(f)
        sumlogf += log_f
        for i in range(m):
            nxt = a[i + 1] if i + 1 < m else 0.0
            ta[i] = phi[i] * a[0] + nxt
        if not steady:
            for i in range(m):
                nxt = P[i + 1, 0] if i + 1 < m else 0.0
                k[i] = (phi[i] * P[0, 0] + nxt) / f
        for i in range(m):
            a[i] = ta[i] + k[i] * v
        if steady:
            continue
        for i in range(m):
            for j in range(m):
                nxt = P[i + 1, j] if i + 1 < m else 0.0
                TP[i, j] = phi[i] * P[0, j] + nxt
        for i in range(m):
            for j in range(m):
                nxt = TP[i, j + 1] if j + 1 < m else 0.0
                P[i, j] = phi[j] * TP[i, 0] + nxt - k[i] * f * k[j] + rr[i, j]
        if f_prev >= 0.0 and fabs(f - f_prev) <= 1e-13 * f:
            steady = 1
        f_prev = f
    return ssq, sumlogf, 1.0


def garch_filter(eps, double omega, double alpha, double beta, double backcast, double floor):
    cdef double[::1] es = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = es.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] sigma2 = out
    cdef Py_ssize_t t
    cdef double prev, cur, e
    prev = backcast if backcast > floor else floor
    sigma2[0] = prev
    for t in range(1, n):
        e = es[t - 1]
        cur = omega + alpha * e * e + beta * prev
        if cur < floor:
            cur = floor
        sigma2[t] = cur
        prev = cur
    return out


def egarch_filter(eps, double omega, double persist, double g_scale, double g_theta,
                  double g_lambda, double log_backcast, double floor):
    cdef double[::1] es = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = es.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] sigma2 = out
    cdef double log_floor = log(floor)
    cdef Py_ssize_t t
    cdef double ln_prev, ln_cur, z, g
    ln_prev = log_backcast
    if ln_prev < log_floor:
        ln_prev = log_floor
    sigma2[0] = exp(ln_prev)
    for t in range(1, n):
        z = es[t - 1] / sqrt(exp(ln_prev))
        g = g_theta * z + g_lambda * (fabs(z) - _SQRT_2_OVER_PI)
        ln_cur = omega + g_scale * g + persist * ln_prev
        if ln_cur < log_floor:
            ln_cur = log_floor
        elif ln_cur > _LN_SIGMA2_MAX:
            ln_cur = _LN_SIGMA2_MAX
        sigma2[t] = exp(ln_cur)
        ln_prev = ln_cur
    return out
