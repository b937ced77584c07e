"""Pure-Python filter recursions, a drop-in fallback for rgvix._kernels.

Each kernel fills preallocated output arrays and returns -1 on success or
the time index at which the conditional variance left the admissible range
[exp(LOGH_MIN), exp(LOGH_MAX)].  Keep these in lockstep with _kernels.pyx;
the test suite cross-checks both backends.
"""

import math

LOGH_MIN = -30.0
LOGH_MAX = 10.0
_H_MIN = math.exp(LOGH_MIN)
_H_MAX = math.exp(LOGH_MAX)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def rg_filter(r, logx, lam, omega, beta, tau1, tau2, gamma, kappa, phi,
              delta1, delta2, quad, rf, log_h1, logh, z, u_raw):
    """Realized GARCH in observation-driven form.

    Writes log h_1..log h_{T+1} into ``logh`` (length T+1), the return
    shocks into ``z`` and the raw measurement residuals
    log x - kappa - phi*log h - delta(z) into ``u_raw``.
    """
    T = r.shape[0]
    a0 = omega - gamma * kappa
    a1 = beta - gamma * phi
    lh = log_h1
    logh[0] = lh
    for t in range(T):
        if not (LOGH_MIN <= lh <= LOGH_MAX):
            return t
        h = math.exp(lh)
        sq = math.sqrt(h)
        zt = (r[t] - rf - lam * sq + 0.5 * h) / sq
        if quad:
            tz = tau1 * zt + tau2 * (zt * zt - 1.0)
        else:
            tz = tau1 * zt + tau2 * (abs(zt) - _SQRT_2_OVER_PI)
        dz = delta1 * zt + delta2 * (zt * zt - 1.0)
        z[t] = zt
        u_raw[t] = logx[t] - kappa - phi * lh - dz
        lh = a0 + a1 * lh + (tz - gamma * dz) + gamma * logx[t]
        logh[t + 1] = lh
    if not (LOGH_MIN <= lh <= LOGH_MAX):
        return T
    return -1


def eg_filter(r, lam, omega, beta, tau1, tau2, quad, rf, log_h1, logh, z):
    """EGARCH(1,1); ``quad`` selects z^2-1 leverage instead of |z|."""
    T = r.shape[0]
    lh = log_h1
    logh[0] = lh
    for t in range(T):
        if not (LOGH_MIN <= lh <= LOGH_MAX):
            return t
        h = math.exp(lh)
        sq = math.sqrt(h)
        zt = (r[t] - rf - lam * sq + 0.5 * h) / sq
        z[t] = zt
        if quad:
            lev = tau1 * zt + tau2 * (zt * zt - 1.0)
        else:
            lev = tau1 * zt + tau2 * (abs(zt) - _SQRT_2_OVER_PI)
        lh = omega + beta * lh + lev
        logh[t + 1] = lh
    if not (LOGH_MIN <= lh <= LOGH_MAX):
        return T
    return -1


def g_filter(r, lam, omega, beta, alpha, rf, h1, h, z):
    """GARCH(1,1) with the lam*sqrt(h) - h/2 return drift."""
    T = r.shape[0]
    ht = h1
    h[0] = ht
    for t in range(T):
        if not (_H_MIN <= ht <= _H_MAX):
            return t
        sq = math.sqrt(ht)
        zt = (r[t] - rf - lam * sq + 0.5 * ht) / sq
        z[t] = zt
        ht = omega + beta * ht + alpha * ht * zt * zt
        h[t + 1] = ht
    if not (_H_MIN <= ht <= _H_MAX):
        return T
    return -1


def hn_filter(r, lam, omega, beta, alpha, delta, rf, h1, h, z):
    """Heston-Nandi GARCH; note the lam*h (not lam*sqrt(h)) return drift."""
    T = r.shape[0]
    ht = h1
    h[0] = ht
    for t in range(T):
        if not (_H_MIN <= ht <= _H_MAX):
            return t
        sq = math.sqrt(ht)
        zt = (r[t] - rf - lam * ht + 0.5 * ht) / sq
        z[t] = zt
        d = zt - delta * sq
        ht = omega + beta * ht + alpha * d * d
        h[t + 1] = ht
    if not (_H_MIN <= ht <= _H_MAX):
        return T
    return -1
