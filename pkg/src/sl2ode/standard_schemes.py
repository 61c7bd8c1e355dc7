"""Comparison baselines: uniform-lattice finite differences and Runge-Kutta.

The implicit steppers replace derivatives by centered differences on a
uniform grid and solve the resulting algebraic equation by Newton from the
linear extrapolation (tolerance 1e-12, 50 iterations).  A solved root is
accepted only when it stays near the extrapolation: the implied increment may
not jump by more than 50% relative to the previous one.  That is what "fails
to converge close to the singularity" looks like operationally: at a fold the
tracking root either disappears or jumps, and the stepper reports StepFailure
instead of gliding onto a spurious branch.

The reference integrator is a Dormand-Prince 4(5) embedded pair with a
standard step-size controller, or classic fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, StepFailure
from .geometry import lattice_invariant
from .invariant_schemes import power_law_F, third_order_rhs_y3
from .trajectory import (REASON_SINGULARITY, REASON_STEP_FAILURE, REASON_STEPS,
                         REASON_XMAX, Trajectory)

NEWTON_RTOL = 1e-12
NEWTON_MAXIT = 50
INCREMENT_JUMP_MAX = 0.5


@dataclass(frozen=True)
class UniformGrid:
    """x_n = x0 + n h, the a-priori lattice of the standard schemes."""

    x0: float
    h: float
    n_max: int

    def __post_init__(self):
        if self.h <= 0.0 or self.n_max < 0:
            raise ConfigurationError(f"bad grid: h={self.h}, n_max={self.n_max}")

    def x(self, n: int) -> float:
        return self.x0 + n * self.h


@dataclass(frozen=True)
class RKConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = math.inf
    method: str = "adaptive-embedded-45"

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0 or self.h_min <= 0.0:
            raise ConfigurationError("tolerances and h_min must be positive")
        if self.method not in ("adaptive-embedded-45", "fixed-RK4"):
            raise ConfigurationError(f"unknown method {self.method!r}")


def _guarded_root(y_guess: float, y_prev_inc: float, newton_iter, x_n: float,
                  scale: float) -> float:
    """Run `newton_iter` from the guess and apply the increment-jump gate."""
    y = y_guess
    for it in range(NEWTON_MAXIT):
        step = newton_iter(y)
        if step is None or not math.isfinite(step):
            raise StepFailure("Newton derivative degenerate", x=x_n, iterations=it)
        y_new = y + step
        if not math.isfinite(y_new):
            raise StepFailure("Newton diverged", x=x_n, iterations=it)
        if abs(step) <= NEWTON_RTOL * max(abs(y_new), scale):
            y = y_new
            break
        y = y_new
    else:
        raise StepFailure("Newton did not converge in 50 iterations",
                          x=x_n, iterations=NEWTON_MAXIT)
    jump = abs(y - y_guess)
    if jump > INCREMENT_JUMP_MAX * max(abs(y_prev_inc), 1e-13 * scale):
        raise StepFailure("no real root near the extrapolation",
                          x=x_n, residual=jump)
    return y


def fd_step_second_order(grid: UniformGrid, y_prev: float, y_cur: float,
                         n: int, gamma: float) -> float:
    """Centered implicit step for 2 x y'' + y' = gamma y'^3 at x_n.

    gamma = 0 degenerates to a linear equation solved directly.
    """
    h = grid.h
    x_n = grid.x(n)
    scale = max(abs(y_cur), abs(y_prev), 1.0)
    if gamma == 0.0:
        c2 = 2.0 * x_n / (h * h)
        c1 = 1.0 / (2.0 * h)
        return (c2 * (2.0 * y_cur - y_prev) + c1 * y_prev) / (c2 + c1)

    def newton_iter(y):
        D = (y - y_prev) / (2.0 * h)
        F = 2.0 * x_n * (y - 2.0 * y_cur + y_prev) / (h * h) + D - gamma * D ** 3
        dF = 2.0 * x_n / (h * h) + (1.0 - 3.0 * gamma * D * D) / (2.0 * h)
        if dF == 0.0:
            return None
        return -F / dF

    guess = 2.0 * y_cur - y_prev
    return _guarded_root(guess, y_cur - y_prev, newton_iter, x_n, scale)


def fd_explicit_second_order(grid: UniformGrid, y_prev: float, y_cur: float,
                             n: int, gamma: float) -> float:
    """Explicit first-order variant: y' taken one-sided at x_n."""
    h = grid.h
    x_n = grid.x(n)
    D = (y_cur - y_prev) / h
    return 2.0 * y_cur - y_prev + h * h * (gamma * D ** 3 - D) / (2.0 * x_n)


def fd_step_third_order(grid: UniformGrid, y_nm1: float, y_n: float,
                        y_np1: float, n: int, alpha: float) -> float:
    """Implicit 4-point step for Eq. x^2(y'y''' - 3y''^2) = alpha (2xy''+y')^{3/2} y'^{1/2}.

    Differences are centered at the midpoint x_n + h/2 of the stencil
    (n-1, n, n+1, n+2); the fractional powers restrict the domain to
    (2 x y'' + y') >= 0, y' > 0 along the discrete solution.
    """
    h = grid.h
    x_m = grid.x(n) + h / 2.0
    scale = max(abs(y_n), abs(y_np1), 1.0)
    D1 = (y_np1 - y_n) / h

    def newton_iter(y):
        D2 = (y - y_np1 - y_n + y_nm1) / (2.0 * h * h)
        D3 = (y - 3.0 * y_np1 + 3.0 * y_n - y_nm1) / h ** 3
        z = 2.0 * x_m * D2 + D1
        if z < 0.0 or D1 <= 0.0:
            raise StepFailure("fractional-power domain left at the midpoint",
                              x=x_m, residual=z)
        F = x_m * x_m * (D1 * D3 - 3.0 * D2 * D2) - alpha * z * math.sqrt(z) * math.sqrt(D1)
        dF = x_m * x_m * (D1 / h ** 3 - 3.0 * D2 / (h * h)) \
            - alpha * 1.5 * math.sqrt(z) * (x_m / (h * h)) * math.sqrt(D1)
        if dF == 0.0:
            return None
        return -F / dF

    guess = 2.0 * y_np1 - y_n
    return _guarded_root(guess, y_np1 - y_n, newton_iter, x_m, scale)


# --------------------------------------------------------------------------
# run drivers
# --------------------------------------------------------------------------

def _fd_trajectory(xs, ys, scheme, params, termination, failure=None) -> Trajectory:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    i1 = np.full(n, np.nan)
    i2 = np.full(n, np.nan)
    if np.all(xs > 0.0):
        for i in range(1, n):
            i1[i] = lattice_invariant(xs[i - 1], ys[i - 1], xs[i], ys[i])
        for i in range(2, n):
            i2[i] = lattice_invariant(xs[i - 2], ys[i - 2], xs[i], ys[i])
    return Trajectory(xs=xs, ys=ys, I1=i1, I2_or_J=i2, scheme=scheme,
                      params=params, termination=termination,
                      failure=failure).finalize()


def run_fd_second_order(grid: UniformGrid, y0: float, y1: float, gamma: float,
                        explicit: bool = False) -> Trajectory:
    """March the centered (or explicit one-sided) scheme across the grid."""
    xs = [grid.x(0), grid.x(1)]
    ys = [y0, y1]
    termination = REASON_XMAX
    failure = None
    step = fd_explicit_second_order if explicit else fd_step_second_order
    for n in range(1, grid.n_max):
        try:
            y_next = step(grid, ys[-2], ys[-1], n, gamma)
        except StepFailure as e:
            termination = REASON_STEP_FAILURE
            failure = {"x": e.x, "iterations": e.iterations, "residual": e.residual,
                       "message": str(e)}
            break
        xs.append(grid.x(n + 1))
        ys.append(y_next)
    scheme = "fd2_explicit" if explicit else "fd2_centered"
    return _fd_trajectory(xs, ys, scheme, {"gamma": gamma, "h": grid.h},
                          termination, failure)


def run_fd_third_order(grid: UniformGrid, y0: float, yp0: float, ypp0: float,
                       alpha: float) -> Trajectory:
    """Taylor-seed three values, then march the implicit 4-point scheme."""
    F = power_law_F(alpha)
    c3 = third_order_rhs_y3(grid.x0, yp0, ypp0, F)
    ys = [y0 + (k * grid.h) * yp0 + (k * grid.h) ** 2 * ypp0 / 2.0
          + (k * grid.h) ** 3 * c3 / 6.0 for k in range(3)]
    xs = [grid.x(k) for k in range(3)]
    termination = REASON_XMAX
    failure = None
    for n in range(1, grid.n_max - 1):
        try:
            y_next = fd_step_third_order(grid, ys[-3], ys[-2], ys[-1], n, alpha)
        except StepFailure as e:
            termination = REASON_STEP_FAILURE
            failure = {"x": e.x, "iterations": e.iterations, "residual": e.residual,
                       "message": str(e)}
            break
        xs.append(grid.x(n + 2))
        ys.append(y_next)
    return _fd_trajectory(xs, ys, "fd3_centered", {"alpha": alpha, "h": grid.h},
                          termination, failure)


# --------------------------------------------------------------------------
# Runge-Kutta reference
# --------------------------------------------------------------------------

def make_rhs(ode: str, params: dict) -> tuple[Callable, int]:
    """First-order system for one of the three ODEs; returns (rhs, dimension)."""
    if ode == "second_order":
        gamma = params["gamma"]

        def rhs(x, Y):
            y, p = Y
            return (p, (gamma * p ** 3 - p) / (2.0 * x))

        return rhs, 2
    if ode == "third_order":
        F = params.get("F")
        if F is None:
            F = power_law_F(params["alpha"])

        def rhs(x, Y):
            y, p, q = Y
            return (p, q, third_order_rhs_y3(x, p, q, F))

        return rhs, 3
    if ode == "schwarzian":
        F = params["F"]

        def rhs(x, Y):
            y, p, q = Y
            if p == 0.0:
                raise DomainError("y' = 0 in the Schwarzian ODE")
            return (p, q, (F(x) * p * p + 1.5 * q * q) / p)

        return rhs, 3
    raise ConfigurationError(f"unknown ode {ode!r}")


# Dormand-Prince 5(4) tableau; row 7 doubles as the 5th-order weights (FSAL).
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def rk_reference(rhs: Callable, x0: float, Y0: Sequence[float], x_max: float,
                 cfg: RKConfig, max_steps: int = 1_000_000) -> Trajectory:
    """Integrate to x_max, recording every accepted step.

    Error control at (abs_tol, rel_tol); a step forced below h_min terminates
    the run with a singularity-suspected reason and the last valid x.
    """
    if cfg.method == "fixed-RK4":
        return _rk4_fixed(rhs, x0, Y0, x_max, cfg.h_init, max_steps)
    x = x0
    Y = np.asarray(Y0, dtype=float)
    xs = [x]
    ys = [Y[0]]
    h = min(cfg.h_init, cfg.h_max, x_max - x0)
    termination = REASON_STEPS
    k_stages = [None] * 7
    for _ in range(max_steps):
        if x >= x_max:
            termination = REASON_XMAX
            break
        h = min(h, cfg.h_max, x_max - x)
        if h < cfg.h_min:
            termination = REASON_SINGULARITY
            break
        try:
            for i in range(7):
                Yi = Y.copy()
                for j, aij in enumerate(_DP_A[i]):
                    if aij != 0.0:
                        Yi += (h * aij) * k_stages[j]
                k_stages[i] = np.asarray(rhs(x + _DP_C[i] * h, Yi), dtype=float)
        except DomainError:
            h *= 0.5
            continue
        Y5 = Y + h * sum(b * k for b, k in zip(_DP_B5, k_stages) if b != 0.0)
        Y4 = Y + h * sum(b * k for b, k in zip(_DP_B4, k_stages) if b != 0.0)
        err = Y5 - Y4
        tol = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(Y), np.abs(Y5))
        enorm = float(np.sqrt(np.mean((err / tol) ** 2)))
        if not math.isfinite(enorm):
            h *= 0.5
            continue
        if enorm <= 1.0:
            x += h
            Y = Y5
            xs.append(x)
            ys.append(Y[0])
        factor = 0.9 * (enorm ** -0.2) if enorm > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
    n = len(xs)
    nans = np.full(n, np.nan)
    return Trajectory(xs=np.asarray(xs), ys=np.asarray(ys), I1=nans.copy(),
                      I2_or_J=nans.copy(), scheme="rk45",
                      params={"rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol},
                      termination=termination).finalize()


def _rk4_fixed(rhs, x0, Y0, x_max, h, max_steps) -> Trajectory:
    x = x0
    Y = np.asarray(Y0, dtype=float)
    xs = [x]
    ys = [Y[0]]
    termination = REASON_STEPS
    for _ in range(max_steps):
        if x >= x_max - 1e-15 * max(1.0, abs(x_max)):
            termination = REASON_XMAX
            break
        hh = min(h, x_max - x)
        try:
            k1 = np.asarray(rhs(x, Y))
            k2 = np.asarray(rhs(x + hh / 2, Y + hh / 2 * k1))
            k3 = np.asarray(rhs(x + hh / 2, Y + hh / 2 * k2))
            k4 = np.asarray(rhs(x + hh, Y + hh * k3))
        except DomainError:
            termination = REASON_SINGULARITY
            break
        Y = Y + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += hh
        xs.append(x)
        ys.append(Y[0])
    n = len(xs)
    nans = np.full(n, np.nan)
    return Trajectory(xs=np.asarray(xs), ys=np.asarray(ys), I1=nans.copy(),
                      I2_or_J=nans.copy(), scheme="rk4", params={"h": h},
                      termination=termination).finalize()
