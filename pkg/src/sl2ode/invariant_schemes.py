"""Symmetry-preserving steppers.

Second order (explicit): with I1 = (y_n - y_{n-1})/sqrt(x_n x_{n-1}) held
fixed by the lattice law and beta = I1 (gamma I1^2/4 + 2) conserved,

    x_{n+1} = x_{n-1} [ d / (beta x_{n-1} - d) ]^2,
    y_{n+1} = y_n + d^2 / (beta x_{n-1} - d),          d = y_n - y_{n-1}.

Third order (strict lattice, explicit): the unique solve of
{K^{n+2} = F(J1^{n+1}), I1 constant}:

    J1^{n+1} = 4 [y_{n+1} - y_{n-1} - 2 I sqrt(x_{n+1} x_{n-1})] / (sqrt(x_{n+1} x_{n-1}) I^3)
    J1^{n+2} = J1^{n+1} + 2 I F(J1^{n+1})
    I2^{n+2} = 2 I + I^3 J1^{n+2} / 4
    sqrt(x_{n+2}) = I sqrt(x_{n+1} x_n) / (I2^{n+2} sqrt(x_n) - I sqrt(x_{n+1}))
    y_{n+2} = y_{n+1} + I sqrt(x_{n+2} x_{n+1}).

The gamma-lattice variant replaces the lattice law by I1^{n+1} = gamma I1^n
with gamma frozen at seeding and solves the two-equation system by damped
Newton from the strict-mode prediction.  The implicit variant evaluates F at
the mean (J1^{n+1} + J1^{n+2})/2 and solves the scalar equation in
sqrt(x_{n+2}).

Schwarzian scheme (uniform lattice): y_{n+2} solves cross_ratio = K_n with
K_n = 4 [1 - h^2/2 F(x_n + h/2)]; the update is done on increments
d_n = y_{n+1} - y_n, which keeps it exact on Moebius data in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _core
from .errors import (ConfigurationError, DomainError, SingularityReached,
                     StepFailure, check_denominator)
from .geometry import lattice_invariant
from .trajectory import (REASON_DOMAIN, REASON_NONFINITE, REASON_POSTFOLD_EXIT,
                         REASON_SINGULARITY, REASON_STEP_FAILURE, REASON_STEPS,
                         REASON_XMAX, StopCriteria, Trajectory)

_STOP_TO_REASON = {
    _core.STOP_STEPS: REASON_STEPS,
    _core.STOP_XMAX: REASON_XMAX,
    _core.STOP_SINGULARITY: REASON_SINGULARITY,
    _core.STOP_POSTFOLD_EXIT: REASON_POSTFOLD_EXIT,
    _core.STOP_DOMAIN: REASON_DOMAIN,
    _core.STOP_NONFINITE: REASON_NONFINITE,
}


def power_law_F(alpha: float) -> Callable[[float], float]:
    """F(z) = alpha z^{3/2}; z < 0 is outside the real domain of the ODE."""

    def F(z: float) -> float:
        if z < 0.0:
            raise DomainError(f"F(z) = alpha z^(3/2) needs z >= 0, got {z}")
        return alpha * z * math.sqrt(z)

    F.alpha = alpha  # type: ignore[attr-defined]
    return F


# --------------------------------------------------------------------------
# second order
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SecondOrderState:
    x_prev: float
    y_prev: float
    x_cur: float
    y_cur: float
    beta: float
    gamma: float
    I1: float


def init_second_order(x0: float, y0: float, x1: float, y1: float,
                      gamma: float) -> SecondOrderState:
    """Build the two-point state; I1 and beta are frozen here."""
    if not (x0 > 0.0 and x1 > x0):
        raise ConfigurationError(f"need 0 < x0 < x1, got x0={x0}, x1={x1}")
    if y1 == y0:
        raise ConfigurationError("y1 = y0 gives I1 = 0 and a degenerate scheme")
    I1 = lattice_invariant(x0, y0, x1, y1)
    beta = I1 * (gamma * I1 * I1 / 4.0 + 2.0)
    return SecondOrderState(x0, y0, x1, y1, beta=beta, gamma=gamma, I1=I1)


def step_second_order(s: SecondOrderState) -> SecondOrderState:
    """One explicit update; raises SingularityReached on a vanishing denominator."""
    d = s.y_cur - s.y_prev
    den = s.beta * s.x_prev - d
    check = abs(s.beta * s.x_prev) + abs(d)
    if abs(den) <= 1e-14 * check:
        raise SingularityReached("second-order update denominator vanished", x=s.x_cur)
    r = d / den
    xn = s.x_prev * r * r
    yn = s.y_cur + d * r
    if not (math.isfinite(xn) and math.isfinite(yn)) or xn <= 0.0:
        raise SingularityReached("second-order update left the domain", x=s.x_cur)
    return SecondOrderState(s.x_cur, s.y_cur, xn, yn, beta=s.beta, gamma=s.gamma,
                            I1=lattice_invariant(s.x_cur, s.y_cur, xn, yn))


# --------------------------------------------------------------------------
# third order
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ThirdOrderState:
    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]
    I1: float                     # lattice invariant between p1 and p2
    gamma_lat: float              # 1.0 in strict mode
    F: Callable[[float], float]
    alpha: Optional[float] = None
    mode: str = "strict"


def third_order_rhs_y3(x: float, y1: float, y2: float,
                       F: Callable[[float], float]) -> float:
    """y''' from the invariant ODE I2c = F(I1c)."""
    if y1 == 0.0:
        raise DomainError("y' = 0: invariants undefined")
    z = (2.0 * x * y2 + y1) / y1 ** 3
    return 3.0 * y2 * y2 / y1 + y1 ** 4 * F(z) / (x * x)


def init_third_order(x0: float, y0: float, yp0: float, ypp0: float, h: float,
                     F: Callable[[float], float] | None = None,
                     alpha: float | None = None,
                     mode: str = "strict") -> ThirdOrderState:
    """Seed three points from an order-3 Taylor expansion.

    y''' at x0 comes from solving the ODE.  Strict mode keeps all three seeds
    on the Taylor curve and root-finds x2 so that the lattice law
    I1^{n+1} = I1^n holds exactly; gamma-lattice mode places the seeds
    uniformly and freezes gamma = I1^{n+1}/I1^n.
    """
    if mode not in ("strict", "gamma_lattice", "implicit"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    if not (x0 > 0.0 and h > 0.0):
        raise ConfigurationError(f"need x0 > 0 and h > 0, got x0={x0}, h={h}")
    if yp0 == 0.0:
        raise ConfigurationError("y'(x0) = 0: the invariants are undefined")
    if alpha is not None:
        if (2.0 * x0 * ypp0 + yp0) * yp0 <= 0.0:
            raise ConfigurationError(
                "F(z) = alpha z^(3/2) needs (2 x y'' + y') y' > 0 at the seed")
        F = power_law_F(alpha)
    if F is None:
        raise ConfigurationError("provide either F or alpha")
    try:
        c3 = third_order_rhs_y3(x0, yp0, ypp0, F)
    except DomainError as e:
        raise ConfigurationError(f"cannot solve the ODE for y''' at the seed: {e}") from e

    def tay(x: float) -> float:
        d = x - x0
        return y0 + d * yp0 + d * d * ypp0 / 2.0 + d ** 3 * c3 / 6.0

    p0 = (x0, y0)
    p1 = (x0 + h, tay(x0 + h))
    i10 = lattice_invariant(*p0, *p1)

    if mode == "gamma_lattice":
        p2 = (x0 + 2.0 * h, tay(x0 + 2.0 * h))
        i11 = lattice_invariant(*p1, *p2)
        gamma_lat = i11 / i10
        if not gamma_lat > 0.0:
            raise ConfigurationError(f"seed data give gamma_lat = {gamma_lat} <= 0")
        return ThirdOrderState(p0, p1, p2, I1=i11, gamma_lat=gamma_lat, F=F,
                               alpha=alpha, mode=mode)

    # strict: x2 on the Taylor curve with I1 repeating exactly
    def g(x2: float) -> float:
        return lattice_invariant(*p1, x2, tay(x2)) - i10

    lo, hi = x0 + 1.2 * h, x0 + 6.0 * h
    glo, ghi = g(lo), g(hi)
    tries = 0
    while glo * ghi > 0.0 and tries < 60:
        hi += 4.0 * h
        ghi = g(hi)
        tries += 1
    if glo * ghi > 0.0:
        raise ConfigurationError("no invariant-lattice x2 near the Taylor seeds")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if glo * gm <= 0.0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    x2 = 0.5 * (lo + hi)
    p2 = (x2, tay(x2))
    return ThirdOrderState(p0, p1, p2, I1=i10, gamma_lat=1.0, F=F,
                           alpha=alpha, mode=mode)


def _j1_strict(p0, p2, I: float) -> float:
    su = math.sqrt(p2[0] * p0[0])
    return 4.0 * (p2[1] - p0[1] - 2.0 * I * su) / (su * I ** 3)


def step_third_order_explicit(s: ThirdOrderState) -> ThirdOrderState:
    """Strict-lattice explicit update (see module docstring for the formulas)."""
    if s.gamma_lat != 1.0:
        raise ConfigurationError("explicit strict step needs gamma_lat = 1")
    I = s.I1
    j1 = _j1_strict(s.p0, s.p2, I)
    j2 = j1 + 2.0 * I * s.F(j1)
    M = 2.0 * I + 0.25 * I ** 3 * j2
    a = math.sqrt(s.p1[0])
    u = math.sqrt(s.p2[0])
    den = M * a - I * u
    if abs(den) <= 1e-14 * (abs(M * a) + abs(I * u)):
        raise SingularityReached("third-order x-update denominator vanished", x=s.p2[0])
    t = I * u * a / den
    if t <= 0.0:
        raise SingularityReached("no forward point on this branch", x=s.p2[0])
    xn = t * t
    yn = s.p2[1] + I * t * u
    if xn <= s.p2[0]:
        raise SingularityReached("x-update reversed direction", x=s.p2[0])
    return replace(s, p0=s.p1, p1=s.p2, p2=(xn, yn))


def _gamma_predict(s: ThirdOrderState, i11: float, i12: float, j1: float,
                   Fj1: float) -> tuple[float, float]:
    """Closed-form elimination of the gamma-lattice system (Newton seed)."""
    i10 = i11 / s.gamma_lat
    j2 = j1 + (2.0 / 3.0) * Fj1 * (i10 + i11 + i12)
    M = (i11 + i12) + j2 * i11 * i12 * (i11 + i12) / 8.0
    a = math.sqrt(s.p1[0])
    u = math.sqrt(s.p2[0])
    den = M * a - i12 * u
    if den == 0.0:
        raise SingularityReached("gamma-lattice prediction denominator vanished", x=s.p2[0])
    t = i11 * u * a / den
    if t <= 0.0:
        raise SingularityReached("no forward point on this branch", x=s.p2[0])
    return t, s.p2[1] + i12 * t * u


def step_third_order_gamma(s: ThirdOrderState) -> ThirdOrderState:
    """One gamma-lattice step: damped Newton on {K = F(J1), I1^{n+2} = gamma I1^{n+1}}."""
    if not s.gamma_lat > 0.0:
        raise ConfigurationError("gamma_lat must be positive")
    i11 = s.I1
    i10 = i11 / s.gamma_lat
    i12_target = s.gamma_lat * i11
    a = math.sqrt(s.p1[0])
    u = math.sqrt(s.p2[0])
    su = math.sqrt(s.p2[0] * s.p0[0])
    i2n1 = (s.p2[1] - s.p0[1]) / su
    den_j1 = i10 * i11 * (i10 + i11)
    check_denominator(den_j1, abs(i10 * i11) * (abs(i10) + abs(i11)), "J1 at gamma step")
    j1 = 8.0 * (i2n1 - (i10 + i11)) / den_j1
    Fj1 = s.F(j1)
    isum = i10 + i11

    def residuals(t: float, yn: float) -> tuple[float, float]:
        i12 = (yn - s.p2[1]) / (t * u)
        i2n2 = (yn - s.p1[1]) / (t * a)
        j2 = 8.0 * (i2n2 - (i11 + i12)) / (i11 * i12 * (i11 + i12))
        K = 1.5 * (j2 - j1) / (isum + i12)
        return i12 - i12_target, K - Fj1

    t, yn = _gamma_predict(s, i11, i12_target, j1, Fj1)
    scale_r1 = abs(i12_target) + 1e-30
    scale_r2 = abs(Fj1) + abs(j1) + 1.0
    r1, r2 = residuals(t, yn)
    norm = abs(r1) / scale_r1 + abs(r2) / scale_r2
    # 1e-12 is the target; a stall above it but below 1e-9 is the rounding
    # floor of the residual evaluation and still well inside the scheme's
    # postcondition tolerance
    for it in range(50):
        if norm <= 1e-12:
            break
        dt = 1e-7 * max(abs(t), 1e-8)
        dy = 1e-7 * max(abs(yn), abs(yn - s.p2[1]), 1e-8)
        r1t, r2t = residuals(t + dt, yn)
        r1y, r2y = residuals(t, yn + dy)
        a11 = (r1t - r1) / dt
        a12 = (r1y - r1) / dy
        a21 = (r2t - r2) / dt
        a22 = (r2y - r2) / dy
        det = a11 * a22 - a12 * a21
        if det == 0.0 or not math.isfinite(det):
            raise StepFailure("singular Jacobian in gamma-lattice Newton",
                              x=s.p2[0], iterations=it, residual=norm)
        st = -(r1 * a22 - r2 * a12) / det
        sy = -(r2 * a11 - r1 * a21) / det
        lam = 1.0
        improved = False
        for _ in range(30):
            t_new, y_new = t + lam * st, yn + lam * sy
            if t_new > 0.0:
                n1, n2 = residuals(t_new, y_new)
                if abs(n1) / scale_r1 + abs(n2) / scale_r2 < norm:
                    t, yn, r1, r2 = t_new, y_new, n1, n2
                    norm = abs(r1) / scale_r1 + abs(r2) / scale_r2
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            if norm <= 1e-9:
                break
            raise StepFailure("gamma-lattice Newton stalled",
                              x=s.p2[0], iterations=it, residual=norm)
    else:
        if norm > 1e-9:
            raise StepFailure("gamma-lattice Newton did not converge in 50 iterations",
                              x=s.p2[0], iterations=50, residual=norm)
    xn = t * t
    return replace(s, p0=s.p1, p1=s.p2, p2=(xn, yn), I1=i12_target)


def step_third_order_implicit(s: ThirdOrderState) -> ThirdOrderState:
    """Implicit strict-lattice step: K^{n+2} = F((J1^{n+1} + J1^{n+2})/2)."""
    if s.gamma_lat != 1.0:
        raise ConfigurationError("implicit step runs on the strict lattice")
    I = s.I1
    a = math.sqrt(s.p1[0])
    u = math.sqrt(s.p2[0])
    j1 = _j1_strict(s.p0, s.p2, I)

    def residual(t: float) -> float:
        yn = s.p2[1] + I * t * u
        i2n2 = (yn - s.p1[1]) / (t * a)
        j2 = 4.0 * (i2n2 - 2.0 * I) / I ** 3
        K = 0.5 * (j2 - j1) / I
        return K - s.F(0.5 * (j1 + j2))

    # seed from the explicit step
    explicit = step_third_order_explicit(s)
    t = math.sqrt(explicit.p2[0])
    r = residual(t)
    scale = abs(j1) + 1.0
    for it in range(50):
        if abs(r) <= 1e-12 * scale:
            break
        dt = 1e-7 * t
        dr = (residual(t + dt) - r) / dt
        if dr == 0.0 or not math.isfinite(dr):
            raise StepFailure("flat residual in implicit Newton", x=s.p2[0],
                              iterations=it, residual=r)
        step = -r / dr
        lam = 1.0
        improved = False
        for _ in range(30):
            t_new = t + lam * step
            if t_new > 0.0:
                r_new = residual(t_new)
                if abs(r_new) < abs(r):
                    t, r = t_new, r_new
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            if abs(r) <= 1e-9 * scale:
                break
            raise StepFailure("implicit Newton stalled", x=s.p2[0],
                              iterations=it, residual=r)
    else:
        if abs(r) > 1e-9 * scale:
            raise StepFailure("implicit Newton did not converge in 50 iterations",
                              x=s.p2[0], iterations=50, residual=r)
    xn = t * t
    yn = s.p2[1] + I * t * u
    if xn <= s.p2[0]:
        raise SingularityReached("x-update reversed direction", x=s.p2[0])
    return replace(s, p0=s.p1, p1=s.p2, p2=(xn, yn))


# --------------------------------------------------------------------------
# Schwarzian scheme
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SchwarzState:
    y_nm1: float
    y_n: float
    y_np1: float
    x_cur: float                  # x of the newest point (n+1)
    h: float
    F: Callable[[float], float]


def init_schwarz(x0: float, y0: float, yp0: float, ypp0: float, h: float,
                 F: Callable[[float], float]) -> SchwarzState:
    """Taylor-seed three points; y''' comes from the Schwarzian ODE."""
    if h <= 0.0:
        raise ConfigurationError(f"need h > 0, got {h}")
    if yp0 == 0.0:
        raise ConfigurationError("y'(x0) = 0: the Schwarzian is undefined")
    c3 = (F(x0) * yp0 * yp0 + 1.5 * ypp0 * ypp0) / yp0
    ys = [y0 + (k * h) * yp0 + (k * h) ** 2 * ypp0 / 2.0 + (k * h) ** 3 * c3 / 6.0
          for k in range(3)]
    return SchwarzState(ys[0], ys[1], ys[2], x_cur=x0 + 2.0 * h, h=h, F=F)


def schwarz_K(state: SchwarzState) -> float:
    """K_n = 4 [1 - h^2/2 F(x_n + h/2)] for the upcoming step."""
    x_n = state.x_cur - state.h
    return 4.0 * (1.0 - state.h * state.h / 2.0 * state.F(x_n + state.h / 2.0))


def step_schwarz(s: SchwarzState) -> SchwarzState:
    """Advance one uniform step by solving cross_ratio = K_n for y_{n+2}."""
    d0 = s.y_n - s.y_nm1
    d1 = s.y_np1 - s.y_n
    K = schwarz_K(s)
    ssum = d0 + d1
    den = K * d0 - ssum
    if abs(den) <= 1e-14 * (abs(K * d0) + abs(ssum)):
        raise SingularityReached("cross-ratio update denominator vanished", x=s.x_cur)
    d2 = d1 * ssum / den
    return SchwarzState(s.y_n, s.y_np1, s.y_np1 + d2, x_cur=s.x_cur + s.h,
                        h=s.h, F=s.F)


# --------------------------------------------------------------------------
# run driver
# --------------------------------------------------------------------------

def _traj_from_arrays(xs, ys, i1s, i2s, reason_code, scheme, params) -> Trajectory:
    return Trajectory(
        xs=np.asarray(xs, dtype=float),
        ys=np.asarray(ys, dtype=float),
        I1=np.asarray(i1s, dtype=float),
        I2_or_J=np.asarray(i2s, dtype=float),
        scheme=scheme,
        params=params,
        termination=_STOP_TO_REASON[reason_code],
    ).finalize()


def run(state, stop: StopCriteria) -> Trajectory:
    """Drive any scheme state to a Trajectory under the stopping rules.

    Kernel-eligible runs (second order; strict third order with the power-law
    F; Schwarzian) go through the compiled loops when available.
    """
    x_min = -math.inf if stop.x_min is None else stop.x_min

    if isinstance(state, SecondOrderState):
        xs, ys, i1s, i2s, rc = _core.run_second_order(
            state.x_prev, state.y_prev, state.x_cur, state.y_cur, state.beta,
            stop.max_steps, stop.x_max, x_min, stop.continue_through_fold)
        return _traj_from_arrays(xs, ys, i1s, i2s, rc, "invariant2",
                                 {"gamma": state.gamma, "beta": state.beta,
                                  "I1": state.I1})

    if isinstance(state, SchwarzState):
        n_steps = stop.max_steps
        if math.isfinite(stop.x_max):
            n_steps = min(n_steps, max(0, math.ceil((stop.x_max - state.x_cur) / state.h)))
        x_start = state.x_cur - 2.0 * state.h
        Ks = np.array([4.0 * (1.0 - state.h * state.h / 2.0
                              * state.F(x_start + (k + 1) * state.h + state.h / 2.0))
                       for k in range(n_steps)], dtype=float)
        ys, rs, rc = _core.run_schwarz(state.y_nm1, state.y_n, state.y_np1, Ks)
        n = len(ys)
        xs = x_start + state.h * np.arange(n)
        i1s = np.full(n, np.nan)
        i1s[1:] = np.diff(np.asarray(ys, dtype=float))
        if rc == _core.STOP_STEPS and math.isfinite(stop.x_max):
            rc = _core.STOP_XMAX
        return _traj_from_arrays(xs, ys, i1s, rs, rc, "schwarz", {"h": state.h})

    if isinstance(state, ThirdOrderState):
        if state.mode == "strict" and state.alpha is not None:
            (x0, y0), (x1, y1), (x2, y2) = state.p0, state.p1, state.p2
            xs, ys, i1s, js, rc = _core.run_third_strict_power(
                x0, y0, x1, y1, x2, y2, state.I1, state.alpha,
                stop.max_steps, stop.x_max, x_min)
            return _traj_from_arrays(xs, ys, i1s, js, rc, "invariant3_strict",
                                     {"alpha": state.alpha, "I1": state.I1})
        return _run_third_python(state, stop, x_min)

    raise ConfigurationError(f"cannot run state of type {type(state).__name__}")


def _run_third_python(state: ThirdOrderState, stop: StopCriteria,
                      x_min: float) -> Trajectory:
    if state.mode == "strict":
        stepper = step_third_order_explicit
        scheme = "invariant3_strict"
    elif state.mode == "gamma_lattice":
        stepper = step_third_order_gamma
        scheme = "invariant3_gamma"
    elif state.mode == "implicit":
        stepper = step_third_order_implicit
        scheme = "invariant3_implicit"
    else:
        raise ConfigurationError(f"unknown third-order mode {state.mode!r}")

    nan = float("nan")
    xs = [state.p0[0], state.p1[0], state.p2[0]]
    ys = [state.p0[1], state.p1[1], state.p2[1]]
    i1s = [nan,
           lattice_invariant(*state.p0, *state.p1),
           lattice_invariant(*state.p1, *state.p2)]
    js = [nan, nan, nan]
    reason = REASON_STEPS
    failure = None
    s = state
    x_peak = s.p2[0]
    for _ in range(stop.max_steps):
        try:
            i10 = lattice_invariant(*s.p0, *s.p1)
            i11 = s.I1
            su = math.sqrt(s.p2[0] * s.p0[0])
            i2n1 = (s.p2[1] - s.p0[1]) / su
            j1 = 8.0 * (i2n1 - (i10 + i11)) / (i10 * i11 * (i10 + i11))
            s = stepper(s)
        except SingularityReached:
            reason = REASON_SINGULARITY
            break
        except DomainError:
            reason = REASON_DOMAIN
            break
        except StepFailure as e:
            reason = REASON_STEP_FAILURE
            failure = {"x": e.x, "iterations": e.iterations, "residual": e.residual,
                       "message": str(e)}
            break
        xn, yn = s.p2
        xs.append(xn)
        ys.append(yn)
        i1s.append(lattice_invariant(*s.p1, *s.p2))
        js.append(j1)
        x_peak = max(x_peak, xn)
        if xn >= stop.x_max:
            reason = REASON_XMAX
            break
        if xn < x_min:
            reason = REASON_POSTFOLD_EXIT
            break
        if not stop.continue_through_fold and xn < xs[-2]:
            reason = REASON_SINGULARITY
            break
    params = {"alpha": state.alpha, "gamma_lat": state.gamma_lat, "I1": state.I1}
    traj = Trajectory(xs=np.asarray(xs), ys=np.asarray(ys), I1=np.asarray(i1s),
                      I2_or_J=np.asarray(js), scheme=scheme, params=params,
                      termination=reason, failure=failure)
    return traj.finalize()
