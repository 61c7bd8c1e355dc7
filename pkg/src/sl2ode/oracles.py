"""Exact and semi-analytic reference solutions.

Second order: the closed-form family

    y(x) = y_b +- (2/C) sqrt(C - gamma x)        (C != 0, fold at x = C/gamma)
    y(x) = y_b +- x / sqrt(gamma)                (C = 0)

with the caveat that the C != 0 member solves 2 x y'' + y' = G y'^3 for
G = C^3 / gamma^2, not for gamma itself (substitute and compare powers; the
two coincide exactly when C = gamma).  `SecondOrderExact.ode_gamma` exposes G
so schemes can be run on the equation this oracle actually solves.

Third order: with f = y''/y', the GL(2,R)-invariant equation reduces to
x u' = u(u - 1) + 2 alpha u^{3/2} for u = 2 x f + 1, whose separable solution
is the one-parameter relation

    K x s^2 = |s + A|^{B/q} (s + B)^{-A/q},      s = sqrt(2 x f + 1),

where A = alpha - q, B = alpha + q, q = sqrt(alpha^2 + 1) and K > 0 is the
integration constant.  s = -A is an equilibrium separating two branches:
`lower` (s < -A, reaching x -> infinity) and `upper` (s > -A, which ends in a
square-root singularity at x = 1/K).  y is rebuilt from f by the nested
quadratures y = y0 + C1 Int_0^x exp(Int_0^t f ds) dt; the inner integrand has
an exactly known c/s part at the origin (c = (A^2 - 1)/2 ... see `_f_pole`)
which is integrated analytically, the rest adaptively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, DomainError, OracleUnavailableError

QUAD_TOL = 1e-12


# --------------------------------------------------------------------------
# second order
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SecondOrderExact:
    gamma: float
    C: float
    y_b: float
    branch: str = "plus"

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if self.branch not in ("plus", "minus"):
            raise ConfigurationError(f"branch must be plus/minus, got {self.branch}")

    @property
    def sign(self) -> float:
        return 1.0 if self.branch == "plus" else -1.0

    @property
    def ode_gamma(self) -> float:
        """Coefficient G for which this is an exact solution of 2xy''+y' = G y'^3."""
        if self.C == 0.0:
            return self.gamma
        return self.C ** 3 / self.gamma ** 2

    def value(self, x: float) -> float:
        return exact_second_order(self, x)

    def derivative(self, x: float) -> float:
        if self.C == 0.0:
            return self.sign / math.sqrt(self.gamma)
        rad = self.C - self.gamma * x
        if rad < 0.0:
            raise DomainError(f"x = {x} beyond the fold x = {self.C / self.gamma}")
        if rad == 0.0:
            return math.copysign(math.inf, -self.sign)
        return -self.sign * self.gamma / (self.C * math.sqrt(rad))


def exact_second_order(cfg: SecondOrderExact, x: float) -> float:
    if cfg.C == 0.0:
        return cfg.y_b + cfg.sign * x / math.sqrt(cfg.gamma)
    rad = cfg.C - cfg.gamma * x
    if rad < 0.0:
        raise DomainError(f"gamma x > C: x = {x} beyond the fold x = {cfg.C / cfg.gamma}")
    return cfg.y_b + cfg.sign * (2.0 / cfg.C) * math.sqrt(rad)


def singularity_x(cfg: SecondOrderExact) -> float:
    """The fold x = C/gamma where both branches meet at y_b."""
    if cfg.gamma == 0.0:
        raise ConfigurationError("gamma = 0 has no fold")
    return cfg.C / cfg.gamma


# --------------------------------------------------------------------------
# third order: the f-relation
# --------------------------------------------------------------------------

def _abc(alpha: float) -> tuple[float, float, float]:
    q = math.sqrt(alpha * alpha + 1.0)
    return alpha - q, alpha + q, q


def _branch_rhs(s: float, alpha: float) -> float:
    """|s+A|^{B/q} (s+B)^{-A/q}, the x-independent side of the relation."""
    A, B, q = _abc(alpha)
    return abs(s + A) ** (B / q) * (s + B) ** (-A / q)


def functional_residual(f: float, x: float, alpha: float, K: float) -> float:
    """f minus the value the branch relation implies at (x, f)."""
    u = 2.0 * x * f + 1.0
    if u <= 0.0:
        raise DomainError(f"2 x f + 1 = {u} <= 0")
    s = math.sqrt(u)
    implied = (_branch_rhs(s, alpha) / (K * x) - 1.0) / (2.0 * x)
    return f - implied


def solve_f(x: float, alpha: float, K: float, branch: str = "lower") -> float:
    """Solve the branch relation for f at x; bracketing plus safeguarded Newton.

    Raises OracleUnavailableError when the branch has no root at this x (for
    the upper branch that happens at and beyond the singularity x = 1/K).
    """
    if K <= 0.0:
        raise ConfigurationError(f"K must be positive, got {K}")
    if x <= 0.0:
        raise DomainError(f"solve_f needs x > 0, got {x}")
    A, B, q = _abc(alpha)
    rp = -A

    def phi(s: float) -> float:
        return K * x * s * s - _branch_rhs(s, alpha)

    def dphi(s: float) -> float:
        rhs = _branch_rhs(s, alpha)
        return 2.0 * K * x * s - rhs * ((B / q) / (s + A) + (-A / q) / (s + B))

    if branch == "lower":
        lo = 1e-300
        hi = rp * (1.0 - 1e-12)
        flo, fhi = phi(lo), phi(hi)
        if flo * fhi > 0.0:
            raise OracleUnavailableError(
                f"no root on the lower branch at x = {x} (K = {K})")
    elif branch == "upper":
        lo = rp * (1.0 + 1e-12)
        flo = phi(lo)
        hi = 2.0 * rp
        fhi = phi(hi)
        grow = 0
        while fhi > 0.0 and grow < 60:
            hi *= 2.0
            fhi = phi(hi)
            grow += 1
        if flo * fhi > 0.0:
            raise OracleUnavailableError(
                f"upper branch has no root at x = {x}: beyond the singularity "
                f"x = {1.0 / K}")
    else:
        raise ConfigurationError(f"branch must be lower/upper, got {branch!r}")

    # bisect to a narrow bracket, then polish with bracketed Newton
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = phi(mid)
        if flo * fm <= 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo <= 1e-12 * hi:
            break
    s = 0.5 * (lo + hi)
    for _ in range(8):
        d = dphi(s)
        if d == 0.0:
            break
        s_new = s - phi(s) / d
        if not (lo <= s_new <= hi):
            break
        if s_new == s:
            break
        s = s_new
    return (s * s - 1.0) / (2.0 * x)


def upper_branch_x_end(alpha: float, K: float) -> float:
    """The square-root singularity of the upper branch sits at x = 1/K."""
    return 1.0 / K


def _f_pole(alpha: float) -> float:
    """Coefficient c of the f ~ c/x behavior at x -> 0 (both branches).

    As x -> 0 the relation forces s -> -A, so f = (s^2-1)/(2x) ~ c/x with
    c = (A^2 - 1)/2.
    """
    A, _, _ = _abc(alpha)
    return (A * A - 1.0) / 2.0


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = 48) -> float:
    """Plain recursive adaptive Simpson with Richardson correction."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, fa, lm, flm, m, fm, left, tol / 2.0, depth + 1)
                + rec(m, fm, rm, frm, b, fb, right, tol / 2.0, depth + 1))

    return rec(a, fa, m, fm, b, fb, whole, tol, 0)


class _CumulativeIntegral:
    """Cumulative integral of `fun` from `origin`, with anchor caching.

    Queries integrate adaptively from the nearest previous anchor, so dense
    monotone query patterns (quadrature recursions, sorted grids) stay cheap.
    """

    def __init__(self, fun, origin: float = 0.0, tol: float = QUAD_TOL):
        self.fun = fun
        self.tol = tol
        self.anchors = [origin]
        self.values = [0.0]

    def upto(self, t: float) -> float:
        import bisect
        i = bisect.bisect_right(self.anchors, t) - 1
        if i < 0:
            base_t, base_v = self.anchors[0], self.values[0]
        else:
            base_t, base_v = self.anchors[i], self.values[i]
        if t == base_t:
            return base_v
        val = base_v + adaptive_simpson(self.fun, base_t, t, self.tol)
        j = bisect.bisect_left(self.anchors, t)
        self.anchors.insert(j, t)
        self.values.insert(j, val)
        return val


# --------------------------------------------------------------------------
# third order: reconstruction and fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ThirdOrderImplicit:
    alpha: float
    K: float
    C1: float
    y0: float
    branch: str = "lower"

    def __post_init__(self):
        if self.K == 0.0:
            raise ConfigurationError("K must be nonzero")


class _Reconstructor:
    """Shared machinery for reconstruct_y and fit_constants."""

    def __init__(self, cfg: ThirdOrderImplicit):
        self.cfg = cfg
        self.c = _f_pole(cfg.alpha)
        A, B, q = _abc(cfg.alpha)
        self._rp = -A
        self._B = B
        self._qB = q / B
        self._Aq = A / q
        # W such that the root sits at |s - rp| = (W x)^{q/B} as x -> 0
        self._W = cfg.K * self._rp ** 2 * (self._rp + B) ** (A / q)
        self._sign = -1.0 if cfg.branch == "lower" else 1.0
        self._fcache: dict[float, float] = {}
        self._rho_int = _CumulativeIntegral(self._rho, 0.0)
        self._E_int = _CumulativeIntegral(self._E, 0.0)

    def f(self, t: float) -> float:
        v = self._fcache.get(t)
        if v is None:
            v = solve_f(t, self.cfg.alpha, self.cfg.K, self.cfg.branch)
            self._fcache[t] = v
        return v

    def _delta_near_origin(self, t: float) -> float | None:
        """|s - rp|/rp at the root, or None when t is not in the asymptotic regime.

        Computed by fixed-point iteration on the branch relation; near the
        origin this is far more accurate than the direct solve, where the
        root is indistinguishable from the equilibrium in double precision.
        """
        if t <= 0.0:
            return 0.0
        d0 = (self._W * t) ** self._qB / self._rp
        if d0 >= 1e-6:
            return None
        rp, B, qB = self._rp, self._B, self._qB
        d = d0
        for _ in range(3):
            s = rp * (1.0 + self._sign * d)
            d = (self.cfg.K * t * s * s * (s + B) ** self._Aq) ** qB / rp
        return d

    def _rho(self, t: float) -> float:
        # f(t) - c/t, the regular part of f at the origin
        if t == 0.0:
            return 0.0
        d = self._delta_near_origin(t)
        if d is not None:
            # rho = (s^2 - rp^2)/(2t) with s = rp (1 +- d), formed without
            # subtracting nearly equal values
            rp = self._rp
            s = rp * (1.0 + self._sign * d)
            return self._sign * d * rp * (s + rp) / (2.0 * t)
        return self.f(t) - self.c / t

    def log_yprime_ratio(self, t: float) -> float:
        """Int_0^t f(s) ds, split as c ln t + Int_0^t rho."""
        if t == 0.0:
            raise DomainError("the inner integral diverges logarithmically at 0")
        return self.c * math.log(t) + self._rho_int.upto(t)

    def _E(self, t: float) -> float:
        # exp(Int_0^t f) = t^c exp(Int rho); vanishes at 0 for c > 0
        if t == 0.0:
            return 0.0 if self.c > 0.0 else math.inf
        return t ** self.c * math.exp(self._rho_int.upto(t))

    def y(self, x: float) -> float:
        if x == 0.0:
            return self.cfg.y0
        return self.cfg.y0 + self.cfg.C1 * self._E_int.upto(x)


def reconstruct_y(cfg: ThirdOrderImplicit, x_grid) -> list[float]:
    """y on the grid via the nested quadratures (inner Int f, outer Int exp)."""
    rec = _Reconstructor(cfg)
    order = sorted(range(len(x_grid)), key=lambda i: x_grid[i])
    out = [0.0] * len(x_grid)
    for i in order:
        out[i] = rec.y(float(x_grid[i]))
    return out


def fit_constants(alpha: float, x0: float, y0: float, yp0: float,
                  ypp0: float) -> ThirdOrderImplicit:
    """Match the implicit solution to initial data (x0, y0, y'0, y''0).

    K comes from inverting the branch relation at s0 = sqrt(2 x0 f0 + 1),
    f0 = y''0/y'0; C1 = y'0 exp(-Int_0^x0 f); the stored y0 makes
    reconstruct_y(x0) return the requested value.
    """
    if yp0 == 0.0:
        raise ConfigurationError("y'(x0) = 0 cannot be fit (f = y''/y' undefined)")
    if yp0 < 0.0:
        raise OracleUnavailableError(
            "the implicit solution is derived for y' > 0; rescale the data")
    if x0 <= 0.0:
        raise ConfigurationError(f"x0 must be positive, got {x0}")
    f0 = ypp0 / yp0
    u0 = 2.0 * x0 * f0 + 1.0
    if u0 <= 0.0:
        raise OracleUnavailableError(f"2 x0 f0 + 1 = {u0} <= 0: no real s0")
    s0 = math.sqrt(u0)
    A, B, q = _abc(alpha)
    rp = -A
    if abs(s0 - rp) <= 1e-12 * rp:
        raise OracleUnavailableError("data sit on the equilibrium branch s = -A")
    branch = "lower" if s0 < rp else "upper"
    K = _branch_rhs(s0, alpha) / (x0 * s0 * s0)
    probe = ThirdOrderImplicit(alpha=alpha, K=K, C1=1.0, y0=0.0, branch=branch)
    rec = _Reconstructor(probe)
    C1 = yp0 * math.exp(-rec.log_yprime_ratio(x0))
    y_at_x0 = C1 * rec._E_int.upto(x0)
    return ThirdOrderImplicit(alpha=alpha, K=K, C1=C1, y0=y0 - y_at_x0,
                              branch=branch)
