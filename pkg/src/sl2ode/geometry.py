"""Group actions of the two sl(2,R) realizations and their invariants.

The two-dimensional realization acts on the (x, y) plane through the flows of

    X1 = d/dy,   X2 = x d/dx + y d/dy,   X3 = 2xy d/dx + y^2 d/dy,

with continuous invariants

    I1c = (2 x y'' + y') / y'^3,
    I2c = x^2 (y' y''' - 3 y''^2) / y'^5,

and five four-point difference invariants built from I1-type factors
(y_b - y_a)/sqrt(x_b x_a).  The one-dimensional realization acts on y alone by
Moebius maps; its differential invariant is the Schwarzian derivative and its
difference invariant the four-point cross-ratio.

Everything here is a pure function; the working domain of the 2D realization
is x > 0 (x < 0 is the mirror domain, mixed signs are rejected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError, check_denominator


@dataclass(frozen=True)
class JetPoint:
    """A point with derivatives, the argument of continuous invariants."""

    x: float
    y: float
    y1: float | None = None
    y2: float | None = None
    y3: float | None = None


@dataclass(frozen=True)
class Stencil4:
    """Four lattice points (x, y) at indices n-1, n, n+1, n+2."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) != 4:
            raise DomainError(f"Stencil4 needs 4 points, got {len(self.points)}")
        xs = self.xs
        if not (xs[0] < xs[1] < xs[2] < xs[3]):
            raise DomainError(f"stencil x-coordinates must be strictly increasing: {xs}")

    @property
    def xs(self) -> tuple[float, float, float, float]:
        return tuple(p[0] for p in self.points)

    @property
    def ys(self) -> tuple[float, float, float, float]:
        return tuple(p[1] for p in self.points)

    @classmethod
    def from_arrays(cls, xs, ys) -> "Stencil4":
        return cls(tuple((float(x), float(y)) for x, y in zip(xs, ys)))


@dataclass(frozen=True)
class GroupElement2D:
    """Finite SL(2,R) element for the 2D realization.

    Composition order is fixed: the X1 flow (y -> y + eps1), then the X2 flow
    ((x, y) -> (lam x, lam y), lam > 0), then the X3 flow
    ((x, y) -> (x/(1 - t3 y)^2, y/(1 - t3 y))).  The X3 flow is only defined
    while 1 - t3 y stays positive.
    """

    eps1: float = 0.0
    lam: float = 1.0
    t3: float = 0.0

    def __post_init__(self):
        if not self.lam > 0.0:
            raise DomainError(f"scaling parameter must be positive, got {self.lam}")


@dataclass(frozen=True)
class GroupElement1D:
    """Moebius map y -> (a y + b)/(c y + d), normalized to det = 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not det > 0.0:
            raise DomainError(f"Moebius determinant must be positive, got {det}")
        s = 1.0 / math.sqrt(det)
        object.__setattr__(self, "a", self.a * s)
        object.__setattr__(self, "b", self.b * s)
        object.__setattr__(self, "c", self.c * s)
        object.__setattr__(self, "d", self.d * s)


class DiffInvariants2D(NamedTuple):
    I1n: float
    I1n1: float
    I1n2: float
    I2n1: float
    I2n2: float


def apply_2d(g: GroupElement2D, p: tuple[float, float]) -> tuple[float, float]:
    """Act on a point of the (x, y) plane; raises DomainError at the X3 pole."""
    x, y = p
    y = y + g.eps1
    x = g.lam * x
    y = g.lam * y
    den = 1.0 - g.t3 * y
    if den <= 0.0:
        raise DomainError(f"projective flow pole crossed: 1 - t3*y = {den}")
    return x / (den * den), y / den


def apply_1d(g: GroupElement1D, y: float) -> float:
    den = g.c * y + g.d
    if den == 0.0:
        raise DomainError(f"Moebius pole: c*y + d = 0 at y = {y}")
    return (g.a * y + g.b) / den


def cont_invariants_2d(p: JetPoint) -> tuple[float, float | None]:
    """Continuous invariants (I1c, I2c) of the 2D realization.

    I2c needs y3 and is returned as None when the jet does not carry it.
    """
    if p.y1 is None or p.y2 is None:
        raise DomainError("I1c needs y1 and y2 on the jet")
    if p.y1 == 0.0:
        raise DomainError("invariants undefined at y' = 0")
    y1 = p.y1
    i1 = (2.0 * p.x * p.y2 + y1) / y1 ** 3
    if p.y3 is None:
        return i1, None
    i2 = p.x * p.x * (y1 * p.y3 - 3.0 * p.y2 * p.y2) / y1 ** 5
    return i1, i2


def schwarzian(p: JetPoint) -> float:
    """Schwarzian derivative (y' y''' - 1.5 y''^2) / y'^2."""
    if p.y1 is None or p.y2 is None or p.y3 is None:
        raise DomainError("schwarzian needs y1, y2, y3 on the jet")
    if p.y1 == 0.0:
        raise DomainError("schwarzian undefined at y' = 0")
    return (p.y1 * p.y3 - 1.5 * p.y2 * p.y2) / (p.y1 * p.y1)


def lattice_invariant(xa: float, ya: float, xb: float, yb: float) -> float:
    """The two-point factor (yb - ya)/sqrt(xb xa) the 2D invariants are built from."""
    if xa <= 0.0 or xb <= 0.0:
        raise DomainError(f"lattice invariant needs x > 0, got {xa}, {xb}")
    return (yb - ya) / math.sqrt(xb * xa)


def diff_invariants_2d(s: Stencil4) -> DiffInvariants2D:
    """The five four-point difference invariants of the 2D realization."""
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = s.points
    if min(x0, x1, x2, x3) <= 0.0:
        raise DomainError(f"difference invariants need all x > 0, got {s.xs}")
    return DiffInvariants2D(
        I1n=lattice_invariant(x0, y0, x1, y1),
        I1n1=lattice_invariant(x1, y1, x2, y2),
        I1n2=lattice_invariant(x2, y2, x3, y3),
        I2n1=lattice_invariant(x0, y0, x2, y2),
        I2n2=lattice_invariant(x1, y1, x3, y3),
    )


def J1(I1a: float, I1b: float, I2: float) -> float:
    """Higher invariant 8(I2 - (I1a + I1b)) / (I1a I1b (I1a + I1b)).

    Its continuous limit is I1c; on the invariant lattice the approximation
    is second order in the step.
    """
    s = I1a + I1b
    den = I1a * I1b * s
    check_denominator(den, abs(I1a * I1b) * (abs(I1a) + abs(I1b)) + abs(I1a) + abs(I1b), "J1")
    return 8.0 * (I2 - s) / den


def K_invariant(J1a: float, J1b: float, I1n: float, I1n1: float, I1n2: float) -> float:
    """Higher invariant (3/2)(J1b - J1a)/(I1n + I1n1 + I1n2); limit is I2c."""
    den = I1n + I1n1 + I1n2
    check_denominator(den, abs(I1n) + abs(I1n1) + abs(I1n2), "K_invariant")
    return 1.5 * (J1b - J1a) / den


def cross_ratio(s: Stencil4) -> float:
    """Moebius-invariant cross-ratio of the four stencil values.

    R = (y_{n+2} - y_n)(y_{n+1} - y_{n-1}) / [(y_{n+2} - y_{n+1})(y_n - y_{n-1})].
    Uniformly sampled data of any Moebius function give R = 4.
    """
    y0, y1, y2, y3 = s.ys
    d0 = y1 - y0
    d2 = y3 - y2
    scale = max(abs(v) for v in (y0, y1, y2, y3))
    check_denominator(d0, scale, "cross_ratio")
    check_denominator(d2, scale, "cross_ratio")
    check_denominator(y2 - y1, scale, "cross_ratio")
    return (y3 - y1) * (y2 - y0) / (d2 * d0)


def apply_2d_stencil(g: GroupElement2D, s: Stencil4) -> Stencil4:
    return Stencil4(tuple(apply_2d(g, p) for p in s.points))


def apply_1d_stencil(g: GroupElement1D, s: Stencil4) -> Stencil4:
    return Stencil4(tuple((x, apply_1d(g, y)) for x, y in s.points))
