"""Pure-Python implementations of the hot model recursions.

These mirror tickfolio._kernels._cykernels exactly (same operations in the
same order, so results are bit-identical) and are used when the compiled
extension is unavailable.
"""

from __future__ import annotations

import math

import numpy as np

SQRT_2_OVER_PI = 0.7978845608028654  # E|Z| for Z ~ N(0, 1)
LN_SIGMA2_MAX = 700.0  # exp() overflow guard for the EGARCH log-variance


def arma_residuals(x, delta, phi, theta, presample):
    """Innovation recursion eps[t] = x[t] - delta - sum phi*x_lag + sum theta*eps_lag.

    Observations before the sample start are replaced by `presample`,
    innovations before the start by zero. `theta` follows the convention in
    which the moving-average terms enter the mean equation with a minus sign.
    """
    xs = np.ascontiguousarray(x, dtype=np.float64).tolist()
    p = len(phi)
    q = len(theta)
    n = len(xs)
    eps = [0.0] * n
    for t in range(n):
        acc = xs[t] - delta
        for i in range(p):
            lag = t - 1 - i
            acc -= phi[i] * (xs[lag] if lag >= 0 else presample)
        for j in range(q):
            lag = t - 1 - j
            if lag >= 0:
                acc += theta[j] * eps[lag]
        eps[t] = acc
    return np.asarray(eps, dtype=np.float64)


def kalman_arma_loglik(y, phi_pad, r_vec, p0):
    """Exact-likelihood pieces for a zero-mean ARMA in state-space form.

    State transition has first column `phi_pad` and an identity superdiagonal;
    the innovation loading is `r_vec` (first element 1). `p0` is the
    stationary state covariance at unit innovation variance. Returns
    (sum v^2/F, sum log F, ok) for the concentrated Gaussian likelihood;
    ok = 0.0 flags a non-positive innovation variance.
    """
    ys = np.ascontiguousarray(y, dtype=np.float64).tolist()
    phi = list(map(float, phi_pad))
    r = list(map(float, r_vec))
    m = len(phi)
    n = len(ys)
    a = [0.0] * m
    P = [[float(p0[i][j]) for j in range(m)] for i in range(m)]
    rr = [[r[i] * r[j] for j in range(m)] for i in range(m)]
    ssq = 0.0
    sumlogf = 0.0
    log_f = 0.0
    f_prev = -1.0
    steady = False
    k = [0.0] * m
    for t in range(n):
        f = P[0][0]
        if not (f > 1e-300):
            return 0.0, 0.0, 0.0
        v = ys[t] - a[0]
        ssq += v * v / f
        if not steady:
            log_f = math.log(f)
        sumlogf += log_f
        # a <- T a + K v with K = T P[:,0] / f
        ta = [0.0] * m
        for i in range(m):
            nxt = a[i + 1] if i + 1 < m else 0.0
            ta[i] = phi[i] * a[0] + nxt
        if not steady:
            for i in range(m):
                pnxt = P[i + 1][0] if i + 1 < m else 0.0
                k[i] = (phi[i] * P[0][0] + pnxt) / f
        for i in range(m):
            a[i] = ta[i] + k[i] * v
        if steady:
            continue
        # P <- T P T' - K f K' + R R'; once F converges, P and K are frozen
        TP = [[0.0] * m for _ in range(m)]
        for i in range(m):
            for j in range(m):
                nxt = P[i + 1][j] if i + 1 < m else 0.0
                TP[i][j] = phi[i] * P[0][j] + nxt
        for i in range(m):
            for j in range(m):
                nxt = TP[i][j + 1] if j + 1 < m else 0.0
                P[i][j] = phi[j] * TP[i][0] + nxt - k[i] * f * k[j] + rr[i][j]
        if f_prev >= 0.0 and abs(f - f_prev) <= 1e-13 * f:
            steady = True
        f_prev = f
    return ssq, sumlogf, 1.0


def garch_filter(eps, omega, alpha, beta, backcast, floor):
    """Conditional-variance recursion sigma2[t] = omega + alpha*eps[t-1]^2 + beta*sigma2[t-1]."""
    es = np.ascontiguousarray(eps, dtype=np.float64).tolist()
    n = len(es)
    sigma2 = [0.0] * n
    prev = backcast if backcast > floor else floor
    sigma2[0] = prev
    for t in range(1, n):
        e = es[t - 1]
        cur = omega + alpha * e * e + beta * prev
        if cur < floor:
            cur = floor
        sigma2[t] = cur
        prev = cur
    return np.asarray(sigma2, dtype=np.float64)


def egarch_filter(eps, omega, persist, g_scale, g_theta, g_lambda, log_backcast, floor):
    """Log-variance recursion log sigma2[t] = omega + g_scale*g(z[t-1]) + persist*log sigma2[t-1].

    g(z) = g_theta*z + g_lambda*(|z| - E|Z|) with z the standardized innovation.
    """
    es = np.ascontiguousarray(eps, dtype=np.float64).tolist()
    n = len(es)
    log_floor = math.log(floor)
    sigma2 = [0.0] * n
    ln_prev = log_backcast
    if ln_prev < log_floor:
        ln_prev = log_floor
    sigma2[0] = math.exp(ln_prev)
    for t in range(1, n):
        z = es[t - 1] / math.sqrt(math.exp(ln_prev))
        g = g_theta * z + g_lambda * (abs(z) - SQRT_2_OVER_PI)
        ln_cur = omega + g_scale * g + persist * ln_prev
        if ln_cur < log_floor:
            ln_cur = log_floor
        elif ln_cur > LN_SIGMA2_MAX:
            ln_cur = LN_SIGMA2_MAX
        sigma2[t] = math.exp(ln_cur)
        ln_prev = ln_cur
    return np.asarray(sigma2, dtype=np.float64)
