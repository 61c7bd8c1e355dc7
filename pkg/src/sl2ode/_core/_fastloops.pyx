# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the trajectory loops in `_pyloops.py`.

Every arithmetic expression mirrors the pure-Python reference in the same
order, so both backends produce bitwise-identical trajectories.  Keep in sync.
"""

from libc.math cimport sqrt, isfinite, fabs

import numpy as np

STOP_STEPS = 0
STOP_XMAX = 1
STOP_SINGULARITY = 2
STOP_POSTFOLD_EXIT = 3
STOP_DOMAIN = 4
STOP_NONFINITE = 5

cdef double _DEG = 1e-14
cdef double NAN = float("nan")


def run_second_order(double x_prev, double y_prev, double x_cur, double y_cur,
                     double beta, long max_steps, double x_max, double x_min,
                     bint continue_through_fold):
    cdef long cap = max_steps + 2
    xs_a = np.empty(cap, dtype=np.float64)
    ys_a = np.empty(cap, dtype=np.float64)
    i1_a = np.empty(cap, dtype=np.float64)
    i2_a = np.empty(cap, dtype=np.float64)
    cdef double[::1] xs = xs_a
    cdef double[::1] ys = ys_a
    cdef double[::1] i1s = i1_a
    cdef double[::1] i2s = i2_a

    cdef double xp = x_prev, yp = y_prev, xc = x_cur, yc = y_cur
    cdef double d, den, scale, r, xn, yn, dx, dx_prev
    cdef long n = 2
    cdef int reason = STOP_STEPS
    cdef bint folded
    cdef long k

    xs[0] = x_prev; ys[0] = y_prev
    xs[1] = x_cur; ys[1] = y_cur
    i1s[0] = NAN
    i1s[1] = (y_cur - y_prev) / sqrt(x_cur * x_prev)
    i2s[0] = NAN; i2s[1] = NAN
    dx_prev = xc - xp

    for k in range(max_steps):
        d = yc - yp
        den = beta * xp - d
        scale = fabs(beta * xp) + fabs(d)
        if fabs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        r = d / den
        xn = xp * r * r
        yn = yc + d * r
        if not (isfinite(xn) and isfinite(yn)) or xn <= 0.0:
            reason = STOP_NONFINITE
            break
        xs[n] = xn
        ys[n] = yn
        i1s[n] = (yn - yc) / sqrt(xn * xc)
        i2s[n] = (yn - yp) / sqrt(xn * xp)
        n += 1
        dx = xn - xc
        folded = dx * dx_prev < 0.0
        xp = xc; yp = yc; xc = xn; yc = yn
        dx_prev = dx
        if folded and not continue_through_fold:
            reason = STOP_SINGULARITY
            break
        if xn >= x_max:
            reason = STOP_XMAX
            break
        if xn < x_min:
            reason = STOP_POSTFOLD_EXIT
            break
    return xs_a[:n], ys_a[:n], i1_a[:n], i2_a[:n], reason


def run_third_strict_power(double x0, double y0, double x1, double y1,
                           double x2, double y2, double I1, double alpha,
                           long max_steps, double x_max, double x_min):
    cdef long cap = max_steps + 3
    xs_a = np.empty(cap, dtype=np.float64)
    ys_a = np.empty(cap, dtype=np.float64)
    i1_a = np.empty(cap, dtype=np.float64)
    js_a = np.empty(cap, dtype=np.float64)
    cdef double[::1] xs = xs_a
    cdef double[::1] ys = ys_a
    cdef double[::1] i1s = i1_a
    cdef double[::1] js = js_a

    cdef double su, j1, F, j2, M, a, u, den, scale, t, xn, yn
    cdef double I3 = I1 * I1 * I1
    cdef long n = 3
    cdef int reason = STOP_STEPS
    cdef long k

    xs[0] = x0; ys[0] = y0
    xs[1] = x1; ys[1] = y1
    xs[2] = x2; ys[2] = y2
    i1s[0] = NAN
    i1s[1] = (y1 - y0) / sqrt(x1 * x0)
    i1s[2] = (y2 - y1) / sqrt(x2 * x1)
    js[0] = NAN; js[1] = NAN; js[2] = NAN

    for k in range(max_steps):
        su = sqrt(x2 * x0)
        j1 = 4.0 * (y2 - y0 - 2.0 * I1 * su) / (su * I3)
        if j1 < 0.0:
            reason = STOP_DOMAIN
            break
        F = alpha * j1 * sqrt(j1)
        j2 = j1 + 2.0 * I1 * F
        M = 2.0 * I1 + 0.25 * I3 * j2
        a = sqrt(x1)
        u = sqrt(x2)
        den = M * a - I1 * u
        scale = fabs(M * a) + fabs(I1 * u)
        if fabs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        t = I1 * u * a / den
        if t <= 0.0:
            reason = STOP_SINGULARITY
            break
        xn = t * t
        yn = y2 + I1 * t * u
        if not (isfinite(xn) and isfinite(yn)):
            reason = STOP_NONFINITE
            break
        if xn <= x2:
            xs[n] = xn; ys[n] = yn
            i1s[n] = (yn - y2) / sqrt(xn * x2)
            js[n] = j1
            n += 1
            reason = STOP_SINGULARITY
            break
        xs[n] = xn; ys[n] = yn
        i1s[n] = (yn - y2) / sqrt(xn * x2)
        js[n] = j1
        n += 1
        x0 = x1; y0 = y1; x1 = x2; y1 = y2; x2 = xn; y2 = yn
        if xn >= x_max:
            reason = STOP_XMAX
            break
        if xn < x_min:
            reason = STOP_POSTFOLD_EXIT
            break
    return xs_a[:n], ys_a[:n], i1_a[:n], js_a[:n], reason


def run_schwarz(double y0, double y1, double y2, Ks):
    Ks_a = np.ascontiguousarray(Ks, dtype=np.float64)
    cdef double[::1] Kv = Ks_a
    cdef long nK = Kv.shape[0]
    cdef long cap = nK + 3
    ys_a = np.empty(cap, dtype=np.float64)
    rs_a = np.empty(cap, dtype=np.float64)
    cdef double[::1] ys = ys_a
    cdef double[::1] rs = rs_a

    cdef double d0 = y1 - y0
    cdef double d1 = y2 - y1
    cdef double y = y2
    cdef double K, s, den, scale, d2
    cdef long n = 3
    cdef int reason = STOP_STEPS
    cdef long k

    ys[0] = y0; ys[1] = y1; ys[2] = y2
    rs[0] = NAN; rs[1] = NAN; rs[2] = NAN

    for k in range(nK):
        K = Kv[k]
        s = d0 + d1
        den = K * d0 - s
        scale = fabs(K * d0) + fabs(s)
        if fabs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        d2 = d1 * s / den
        y = y + d2
        if not isfinite(y):
            reason = STOP_NONFINITE
            break
        ys[n] = y
        rs[n] = (d1 + d2) * s / (d2 * d0)
        n += 1
        d0 = d1
        d1 = d2
    return ys_a[:n], rs_a[:n], reason
