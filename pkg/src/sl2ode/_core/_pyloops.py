"""Pure-Python reference implementations of the hot trajectory loops.

These are the semantics of record.  The compiled twin in `_fastloops.pyx`
mirrors every arithmetic expression in the same order so that both backends
produce bitwise-identical trajectories; tests assert that equality.  Keep the
two files in sync when touching either.
"""

from __future__ import annotations

import math

# Stop-reason codes shared with the compiled kernels.
STOP_STEPS = 0
STOP_XMAX = 1
STOP_SINGULARITY = 2
STOP_POSTFOLD_EXIT = 3
STOP_DOMAIN = 4
STOP_NONFINITE = 5

_DEG = 1e-14


def run_second_order(x_prev, y_prev, x_cur, y_cur, beta,
                     max_steps, x_max, x_min, continue_through_fold):
    """Iterate the explicit second-order invariant update.

    Returns (xs, ys, i1s, i2s, reason) as Python lists; the first two entries
    replay the seeds (their I2 slot is NaN, the first I1 slot too).
    """
    nan = float("nan")
    xs = [x_prev, x_cur]
    ys = [y_prev, y_cur]
    i1s = [nan, (y_cur - y_prev) / math.sqrt(x_cur * x_prev)]
    i2s = [nan, nan]
    reason = STOP_STEPS
    xp, yp, xc, yc = x_prev, y_prev, x_cur, y_cur
    dx_prev = xc - xp
    for _ in range(max_steps):
        d = yc - yp
        den = beta * xp - d
        scale = abs(beta * xp) + abs(d)
        if abs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        r = d / den
        xn = xp * r * r
        yn = yc + d * r
        if not (math.isfinite(xn) and math.isfinite(yn)) or xn <= 0.0:
            reason = STOP_NONFINITE
            break
        xs.append(xn)
        ys.append(yn)
        i1s.append((yn - yc) / math.sqrt(xn * xc))
        i2s.append((yn - yp) / math.sqrt(xn * xp))
        dx = xn - xc
        folded = dx * dx_prev < 0.0
        xp, yp, xc, yc = xc, yc, xn, yn
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
    return xs, ys, i1s, i2s, reason


def run_third_strict_power(x0, y0, x1, y1, x2, y2, I1, alpha,
                           max_steps, x_max, x_min):
    """Iterate the explicit strict-lattice third-order update with F(z) = alpha z^{3/2}.

    J1 < 0 stops the run with a domain code; a non-monotone or degenerate
    x-update stops it with a singularity code.
    """
    nan = float("nan")
    xs = [x0, x1, x2]
    ys = [y0, y1, y2]
    i1s = [nan,
           (y1 - y0) / math.sqrt(x1 * x0),
           (y2 - y1) / math.sqrt(x2 * x1)]
    js = [nan, nan, nan]
    reason = STOP_STEPS
    I3 = I1 * I1 * I1
    for _ in range(max_steps):
        su = math.sqrt(x2 * x0)
        j1 = 4.0 * (y2 - y0 - 2.0 * I1 * su) / (su * I3)
        if j1 < 0.0:
            reason = STOP_DOMAIN
            break
        F = alpha * j1 * math.sqrt(j1)
        j2 = j1 + 2.0 * I1 * F
        M = 2.0 * I1 + 0.25 * I3 * j2
        a = math.sqrt(x1)
        u = math.sqrt(x2)
        den = M * a - I1 * u
        scale = abs(M * a) + abs(I1 * u)
        if abs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        t = I1 * u * a / den
        if t <= 0.0:
            reason = STOP_SINGULARITY
            break
        xn = t * t
        yn = y2 + I1 * t * u
        if not (math.isfinite(xn) and math.isfinite(yn)):
            reason = STOP_NONFINITE
            break
        if xn <= x2:
            xs.append(xn)
            ys.append(yn)
            i1s.append((yn - y2) / math.sqrt(xn * x2))
            js.append(j1)
            reason = STOP_SINGULARITY
            break
        xs.append(xn)
        ys.append(yn)
        i1s.append((yn - y2) / math.sqrt(xn * x2))
        js.append(j1)
        x0, y0, x1, y1, x2, y2 = x1, y1, x2, y2, xn, yn
        if xn >= x_max:
            reason = STOP_XMAX
            break
        if xn < x_min:
            reason = STOP_POSTFOLD_EXIT
            break
    return xs, ys, i1s, js, reason


def run_schwarz(y0, y1, y2, Ks):
    """Iterate the cross-ratio update y_{n+2} via increments.

    Ks holds K_n = 4 (1 - h^2/2 F(x_n + h/2)) for each step.  Working with
    increments d_n = y_{n+1} - y_n avoids the cancellation y-space updates
    suffer when |y| dwarfs the per-step change.
    """
    nan = float("nan")
    ys = [y0, y1, y2]
    rs = [nan, nan, nan]
    reason = STOP_STEPS
    d0 = y1 - y0
    d1 = y2 - y1
    y = y2
    for K in Ks:
        s = d0 + d1
        den = K * d0 - s
        scale = abs(K * d0) + abs(s)
        if abs(den) <= _DEG * scale:
            reason = STOP_SINGULARITY
            break
        d2 = d1 * s / den
        y = y + d2
        if not math.isfinite(y):
            reason = STOP_NONFINITE
            break
        ys.append(y)
        rs.append((d1 + d2) * s / (d2 * d0))
        d0 = d1
        d1 = d2
    return ys, rs, reason
