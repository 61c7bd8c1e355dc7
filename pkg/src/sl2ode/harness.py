"""Experiment driver: convergence studies, comparisons, singularity runs,
randomized property suites, and CSV/JSON emission.

Error metric: maximum absolute deviation over the common x-range, with the
reference brought to the scheme's (generally non-uniform) lattice by local
cubic interpolation.  Reports are deterministic for a fixed spec and seed;
wall-clock time is kept on the report object but never serialized.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__ as _version
from . import geometry
from .errors import (ConfigurationError, DomainError, OracleUnavailableError,
                     Sl2OdeError)
from .invariant_schemes import (SchwarzState, SecondOrderState, ThirdOrderState,
                                init_schwarz, init_second_order,
                                init_third_order, power_law_F, run,
                                step_schwarz, step_second_order,
                                step_third_order_explicit,
                                third_order_rhs_y3)
from .oracles import SecondOrderExact, ThirdOrderImplicit, reconstruct_y
from .standard_schemes import (RKConfig, UniformGrid, make_rhs, rk_reference,
                               run_fd_second_order, run_fd_third_order)
from .trajectory import StopCriteria, Trajectory

INVARIANT_SCHEMES = ("invariant_strict", "invariant_gamma", "invariant_implicit")
STANDARD_SCHEMES = ("standard_fd", "standard_fd_explicit", "rk_reference")


@dataclass
class ProblemSpec:
    """One runnable experiment configuration."""

    ode: str                              # second_order | third_order | schwarzian
    scheme: str
    ic: tuple                             # (x0, y0[, yp0[, ypp0]])
    h: float = 0.01
    x_max: float = 1.0
    max_steps: int = 100_000
    gamma: float | None = None
    alpha: float | None = None
    F: Callable[[float], float] | None = None
    rk_tol: float = 1e-9
    oracle: object | None = None          # SecondOrderExact | ThirdOrderImplicit
    x_min: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.ode not in ("second_order", "third_order", "schwarzian"):
            raise ConfigurationError(f"unknown ode {self.ode!r}")
        if self.scheme not in INVARIANT_SCHEMES + STANDARD_SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.h <= 0.0 or self.max_steps <= 0:
            raise ConfigurationError("need h > 0 and max_steps > 0")
        need = {"second_order": 3, "third_order": 4, "schwarzian": 4}[self.ode]
        if len(self.ic) < 1:
            raise ConfigurationError("ic needs at least x0")
        if len(self.ic) < need and self.oracle is None:
            raise ConfigurationError(
                f"{self.ode} needs ic of length {need} (or an oracle to sample)")

    def echo(self) -> dict:
        return {
            "ode": self.ode, "scheme": self.scheme, "ic": list(self.ic),
            "h": self.h, "x_max": self.x_max, "max_steps": self.max_steps,
            "gamma": self.gamma, "alpha": self.alpha, "rk_tol": self.rk_tol,
            "label": self.label,
        }


@dataclass
class ExperimentReport:
    trajectories: list = field(default_factory=list)
    errors: list = field(default_factory=list)       # one dict per trajectory
    drift: list = field(default_factory=list)        # conserved-quantity drift
    slope: float | None = None
    slope_residual: float | None = None
    h_list: list = field(default_factory=list)
    endpoint_errors: list = field(default_factory=list)
    singularity_estimate: float | None = None
    singularity_meta: dict = field(default_factory=dict)
    post_branch_max_rel: float | None = None
    error_ratio: float | None = None
    oracle_id: str | None = None
    partial: bool = False
    notes: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0                        # not serialized


# --------------------------------------------------------------------------
# interpolation and metrics
# --------------------------------------------------------------------------

def cubic_interp(xs: np.ndarray, ys: np.ndarray, xq: float) -> float:
    """Local Lagrange cubic through the 4 lattice points nearest xq."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if len(xs) < 2:
        raise ConfigurationError("need at least two points to interpolate")
    if len(xs) < 4:
        return float(np.interp(xq, xs, ys))
    i = int(np.searchsorted(xs, xq))
    i0 = max(0, min(len(xs) - 4, i - 2))
    xx = xs[i0:i0 + 4]
    yy = ys[i0:i0 + 4]
    val = 0.0
    for j in range(4):
        L = 1.0
        for k in range(4):
            if k != j:
                L *= (xq - xx[k]) / (xx[j] - xx[k])
        val += yy[j] * L
    return float(val)


def monotone_prefix(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """The pre-fold part of a trajectory (all of it when x never reverses)."""
    info = traj.singularity
    if info is None:
        return traj.xs, traj.ys
    return traj.xs[:info.index], traj.ys[:info.index]


def value_at(traj: Trajectory, xq: float) -> float:
    xs, ys = monotone_prefix(traj)
    if len(xs) < 2 or not (xs[0] <= xq <= xs[-1]):
        raise ConfigurationError(
            f"x = {xq} outside the trajectory range [{xs[0] if len(xs) else '-'}, "
            f"{xs[-1] if len(xs) else '-'}]")
    return cubic_interp(xs, ys, xq)


def max_error_vs_reference(traj: Trajectory, reference, x_lo: float,
                           x_hi: float) -> dict:
    """Max |y - reference| over the trajectory's pre-fold points in [x_lo, x_hi].

    `reference` is a callable x -> y or a (dense) Trajectory to interpolate.
    """
    if isinstance(reference, Trajectory):
        ref_xs, ref_ys = monotone_prefix(reference)
        x_hi = min(x_hi, float(ref_xs[-1]))
        x_lo = max(x_lo, float(ref_xs[0]))

        def ref(x):
            return cubic_interp(ref_xs, ref_ys, x)
    else:
        ref = reference
    xs, ys = monotone_prefix(traj)
    mask = (xs >= x_lo) & (xs <= x_hi)
    worst = 0.0
    x_at = float("nan")
    count = 0
    for x, y in zip(xs[mask], ys[mask]):
        e = abs(y - ref(float(x)))
        count += 1
        if e > worst:
            worst, x_at = e, float(x)
    return {"max_err": worst, "at_x": x_at, "n_points": count,
            "x_lo": x_lo, "x_hi": x_hi}


def conserved_drift(traj: Trajectory) -> dict:
    """Relative drift of the recorded I1 column and (if present) I2 vs beta."""
    out = {}
    i1 = traj.I1[np.isfinite(traj.I1)]
    if len(i1) >= 2 and i1[0] != 0.0:
        out["I1_rel_drift"] = float(np.max(np.abs(i1 - i1[0]) / abs(i1[0])))
    beta = traj.params.get("beta")
    if beta:
        i2 = traj.I2_or_J[np.isfinite(traj.I2_or_J)]
        if len(i2):
            out["I2_vs_beta_rel"] = float(np.max(np.abs(i2 - beta) / abs(beta)))
    return out


def fit_slope(h_list: Sequence[float], errs: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log err vs log h, with RMS fit residual."""
    lx = np.log(np.asarray(h_list, dtype=float))
    ly = np.log(np.asarray(errs, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return float(coef[0]), resid


# --------------------------------------------------------------------------
# building and running problem specs
# --------------------------------------------------------------------------

def _grid_steps(spec: ProblemSpec, x0: float) -> int:
    span = spec.x_max - x0
    if not math.isfinite(span):
        return spec.max_steps
    return min(spec.max_steps, int(math.ceil(span / spec.h)) + 1)


def _taylor_second_point(x0, y0, yp0, h, gamma):
    ypp0 = (gamma * yp0 ** 3 - yp0) / (2.0 * x0)
    return x0 + h, y0 + h * yp0 + h * h * ypp0 / 2.0


def _seed_pair_second(spec: ProblemSpec) -> tuple[float, float, float, float, float]:
    """(x0, y0, x1, y1, gamma) for the invariant second-order scheme."""
    x0 = float(spec.ic[0])
    if isinstance(spec.oracle, SecondOrderExact):
        orc = spec.oracle
        gamma = orc.ode_gamma
        y0 = orc.value(x0)
        x1 = x0 + spec.h
        return x0, y0, x1, orc.value(x1), gamma
    if spec.gamma is None:
        raise ConfigurationError("second_order needs gamma")
    x0, y0, yp0 = float(spec.ic[0]), float(spec.ic[1]), float(spec.ic[2])
    x1, y1 = _taylor_second_point(x0, y0, yp0, spec.h, spec.gamma)
    return x0, y0, x1, y1, spec.gamma


def run_problem(spec: ProblemSpec) -> Trajectory:
    """Run one spec to a Trajectory (pure dispatch, no metrics)."""
    stop = StopCriteria(x_max=spec.x_max, max_steps=spec.max_steps,
                        x_min=spec.x_min)
    if spec.ode == "second_order":
        if spec.scheme in INVARIANT_SCHEMES:
            x0, y0, x1, y1, gamma = _seed_pair_second(spec)
            return run(init_second_order(x0, y0, x1, y1, gamma), stop)
        if spec.scheme in ("standard_fd", "standard_fd_explicit"):
            x0, y0, x1, y1, gamma = _seed_pair_second(spec)
            n_max = _grid_steps(spec, x0)
            grid = UniformGrid(x0, spec.h, n_max)
            return run_fd_second_order(grid, y0, y1, gamma,
                                       explicit=(spec.scheme == "standard_fd_explicit"))
        gamma = (spec.oracle.ode_gamma if isinstance(spec.oracle, SecondOrderExact)
                 else spec.gamma)
        if isinstance(spec.oracle, SecondOrderExact) and len(spec.ic) < 3:
            x0 = float(spec.ic[0])
            Y0 = [spec.oracle.value(x0), spec.oracle.derivative(x0)]
        else:
            x0 = float(spec.ic[0])
            Y0 = [float(spec.ic[1]), float(spec.ic[2])]
        rhs, _ = make_rhs("second_order", {"gamma": gamma})
        cfg = RKConfig(rel_tol=spec.rk_tol, abs_tol=spec.rk_tol, h_init=spec.h)
        return rk_reference(rhs, x0, Y0, spec.x_max, cfg)

    if spec.ode == "third_order":
        x0, y0, yp0, ypp0 = (float(v) for v in spec.ic[:4])
        if spec.scheme in INVARIANT_SCHEMES:
            mode = {"invariant_strict": "strict", "invariant_gamma": "gamma_lattice",
                    "invariant_implicit": "implicit"}[spec.scheme]
            state = init_third_order(x0, y0, yp0, ypp0, spec.h, F=spec.F,
                                     alpha=spec.alpha, mode=mode)
            return run(state, stop)
        if spec.scheme == "standard_fd":
            if spec.alpha is None:
                raise ConfigurationError("standard_fd third_order needs alpha")
            grid = UniformGrid(x0, spec.h, _grid_steps(spec, x0))
            return run_fd_third_order(grid, y0, yp0, ypp0, spec.alpha)
        if spec.scheme == "standard_fd_explicit":
            raise ConfigurationError("no explicit standard third-order scheme")
        params = {"alpha": spec.alpha} if spec.alpha is not None else {"F": spec.F}
        rhs, _ = make_rhs("third_order", params)
        cfg = RKConfig(rel_tol=spec.rk_tol, abs_tol=spec.rk_tol, h_init=spec.h)
        return rk_reference(rhs, x0, [y0, yp0, ypp0], spec.x_max, cfg)

    # schwarzian
    x0, y0, yp0, ypp0 = (float(v) for v in spec.ic[:4])
    F = spec.F if spec.F is not None else (lambda x: 0.0)
    if spec.scheme in INVARIANT_SCHEMES:
        return run(init_schwarz(x0, y0, yp0, ypp0, spec.h, F), stop)
    if spec.scheme == "rk_reference":
        rhs, _ = make_rhs("schwarzian", {"F": F})
        cfg = RKConfig(rel_tol=spec.rk_tol, abs_tol=spec.rk_tol, h_init=spec.h)
        return rk_reference(rhs, x0, [y0, yp0, ypp0], spec.x_max, cfg)
    raise ConfigurationError(f"scheme {spec.scheme!r} not available for the "
                             "Schwarzian equation")


def _oracle_callable(spec: ProblemSpec):
    """(callable, oracle_id) for the spec's oracle, or (None, None)."""
    orc = spec.oracle
    if isinstance(orc, SecondOrderExact):
        return orc.value, f"exact2(gamma={orc.gamma!r},C={orc.C!r},yb={orc.y_b!r},{orc.branch})"
    if isinstance(orc, ThirdOrderImplicit):
        rec = _reconstructor_for(orc)
        return rec.y, f"implicit3(alpha={orc.alpha!r},K={orc.K!r},{orc.branch})"
    return None, None


_RECONSTRUCTOR_CACHE: dict = {}


def _reconstructor_for(orc: ThirdOrderImplicit):
    rec = _RECONSTRUCTOR_CACHE.get(orc)
    if rec is None:
        from .oracles import _Reconstructor
        rec = _Reconstructor(orc)
        _RECONSTRUCTOR_CACHE[orc] = rec
    return rec


# --------------------------------------------------------------------------
# experiment operations
# --------------------------------------------------------------------------

def run_convergence(spec: ProblemSpec, h_list: Sequence[float]) -> ExperimentReport:
    """Endpoint error at x_max for each h, plus the log-log slope fit."""
    t0 = time.perf_counter()
    report = ExperimentReport(meta={"spec": spec.echo(),
                                    "h_list": list(h_list)})
    report.h_list = list(h_list)
    if len(h_list) == 0:
        report.notes.append("empty h_list")
        report.wall_clock_s = time.perf_counter() - t0
        return report
    ref, oracle_id = _oracle_callable(spec)
    report.oracle_id = oracle_id
    if ref is None:
        report.partial = True
        report.notes.append("oracle unavailable: errors not computed")
        report.wall_clock_s = time.perf_counter() - t0
        return report
    x_end = spec.x_max
    for h in h_list:
        sub = ProblemSpec(**{**spec.__dict__, "h": h, "label": f"h={h}"})
        traj = run_problem(sub)
        report.trajectories.append(traj)
        err = abs(value_at(traj, x_end) - ref(x_end))
        report.endpoint_errors.append(err)
        report.errors.append({"max_err": err, "at_x": x_end})
        report.drift.append(conserved_drift(traj))
    if len(h_list) >= 2:
        report.slope, report.slope_residual = fit_slope(h_list, report.endpoint_errors)
    report.wall_clock_s = time.perf_counter() - t0
    return report


def run_comparison(specs: Sequence[ProblemSpec]) -> ExperimentReport:
    """Per-scheme error curves against a shared reference.

    All specs must share the ode and initial data.  The reference is the
    first spec's oracle when present, otherwise an rk_reference run at
    tolerance 1e-9.  Errors are measured over the common x-range; the ratio
    reported is max_err(second spec) / max_err(first spec).
    """
    t0 = time.perf_counter()
    if not specs:
        raise ConfigurationError("run_comparison needs at least one spec")
    base = specs[0]
    for s in specs[1:]:
        if s.ode != base.ode or tuple(s.ic) != tuple(base.ic):
            raise ConfigurationError("comparison specs must share ode and ic")
    report = ExperimentReport(meta={"specs": [s.echo() for s in specs]})
    ref, oracle_id = _oracle_callable(base)
    if ref is None:
        ref_spec = ProblemSpec(**{**base.__dict__, "scheme": "rk_reference",
                                  "rk_tol": 1e-9, "label": "reference"})
        ref = run_problem(ref_spec)
        oracle_id = f"rk_reference(tol={ref_spec.rk_tol!r})"
    report.oracle_id = oracle_id
    trajs = [run_problem(s) for s in specs]
    report.trajectories = list(trajs)
    x_lo = float(base.ic[0])
    x_hi = min(min(float(monotone_prefix(t)[0][-1]) for t in trajs), base.x_max)
    for t in trajs:
        report.errors.append(max_error_vs_reference(t, ref, x_lo, x_hi))
        report.drift.append(conserved_drift(t))
    if len(trajs) >= 2 and report.errors[0]["max_err"] > 0.0:
        report.error_ratio = report.errors[1]["max_err"] / report.errors[0]["max_err"]
    report.meta["common_range"] = [x_lo, x_hi]
    if isinstance(ref, Trajectory):
        ref_xs, ref_ys = monotone_prefix(ref)
        attach_csv_reference(report,
                             lambda x: cubic_interp(ref_xs, ref_ys, x))
    else:
        attach_csv_reference(report, ref)
    report.wall_clock_s = time.perf_counter() - t0
    return report


def run_singularity(spec: ProblemSpec) -> ExperimentReport:
    """Drive a spec into (and through) its fold and report the estimate."""
    t0 = time.perf_counter()
    report = ExperimentReport(meta={"spec": spec.echo()})
    traj = run_problem(spec)
    report.trajectories.append(traj)
    report.drift.append(conserved_drift(traj))
    info = traj.singularity
    if info is None:
        xs = traj.xs
        if len(xs) >= 3:
            dx = np.abs(np.diff(xs))
            tiny = dx <= 1e-12 * np.abs(xs[1:])
            if np.any(tiny):
                i = int(np.argmax(tiny)) + 1
                report.singularity_estimate = float(xs[i])
                report.singularity_meta = {"index": i, "mode": "step_collapse"}
    else:
        report.singularity_estimate = info.x_closest
        report.singularity_meta = {"index": info.index, "mode": "x_reversal",
                                   "max_slope": info.max_slope}
    if report.singularity_estimate is None:
        report.notes.append("no singularity encountered before x_max")
    elif isinstance(spec.oracle, SecondOrderExact):
        orc = spec.oracle
        x_b = orc.C / orc.gamma
        other = SecondOrderExact(gamma=orc.gamma, C=orc.C, y_b=orc.y_b,
                                 branch="minus" if orc.branch == "plus" else "plus")
        idx = report.singularity_meta.get("index", len(traj) - 1)
        rels = []
        for x, y in zip(traj.xs[idx + 1:], traj.ys[idx + 1:]):
            if x <= x_b - 0.5:
                yref = other.value(float(x))
                rels.append(abs(y - yref) / max(abs(yref), 1e-30))
        if rels:
            report.post_branch_max_rel = float(max(rels))
        report.meta["x_b"] = x_b
        report.oracle_id = _oracle_callable(spec)[1]
        # sampled exact branches, for figure overlays downstream
        for branch_cfg in (orc, other):
            bx = np.linspace(float(spec.ic[0]), x_b - 1e-9 * max(1.0, x_b), 400)
            by = np.array([branch_cfg.value(float(v)) for v in bx])
            nans = np.full(len(bx), np.nan)
            report.trajectories.append(Trajectory(
                xs=bx, ys=by, I1=nans.copy(), I2_or_J=nans.copy(),
                scheme=f"exact_{branch_cfg.branch}",
                params={"gamma": orc.gamma, "C": orc.C, "y_b": orc.y_b},
                termination="oracle_samples"))
    report.meta["termination"] = traj.termination
    if traj.failure:
        report.meta["failure"] = traj.failure
    report.wall_clock_s = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# randomized property suite
# --------------------------------------------------------------------------

def _random_stencil_2d(rng) -> geometry.Stencil4:
    x = 0.2 + 1.8 * rng.random()
    pts = []
    y = -1.0 + 2.0 * rng.random()
    for _ in range(4):
        pts.append((x, y))
        x += 0.05 + 0.45 * rng.random()
        step = (0.05 + 0.95 * rng.random())
        y += step if rng.random() < 0.5 else -step
    return geometry.Stencil4(tuple(pts))


def _random_group_2d(rng, stencil: geometry.Stencil4) -> geometry.GroupElement2D:
    """Rejection-sample an element keeping the stencil inside the domain."""
    for _ in range(200):
        g = geometry.GroupElement2D(
            eps1=-0.5 + rng.random(),
            lam=math.exp(-0.4 + 0.8 * rng.random()),
            t3=-0.3 + 0.6 * rng.random(),
        )
        try:
            moved = geometry.apply_2d_stencil(g, stencil)
        except (DomainError, Sl2OdeError):
            continue
        ys = [g.lam * (y + g.eps1) for y in stencil.ys]
        if min(1.0 - g.t3 * y for y in ys) < 0.2:
            continue
        return g
    raise ConfigurationError("could not sample a domain-preserving group element")


def _random_group_1d(rng) -> geometry.GroupElement1D:
    while True:
        a, b, c, d = (float(rng.standard_normal()) for _ in range(4))
        if a * d - b * c > 0.1:
            return geometry.GroupElement1D(a, b, c, d)


def run_property_suite(seed: int, n_invariance: int = 1000,
                       n_equivariance: int = 100) -> ExperimentReport:
    """Randomized invariance/equivariance checks with a deterministic RNG.

    Violations are findings reported as maxima, not errors.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_diff = 0.0
    worst_cross = 0.0
    for _ in range(n_invariance):
        s = _random_stencil_2d(rng)
        g = _random_group_2d(rng, s)
        base = geometry.diff_invariants_2d(s)
        moved = geometry.diff_invariants_2d(geometry.apply_2d_stencil(g, s))
        for v0, v1 in zip(base, moved):
            worst_diff = max(worst_diff, abs(v1 - v0) / max(abs(v0), 1e-12))
        s1 = _random_stencil_2d(rng)
        g1 = _random_group_1d(rng)
        try:
            r0 = geometry.cross_ratio(s1)
            r1 = geometry.cross_ratio(geometry.apply_1d_stencil(g1, s1))
        except Sl2OdeError:
            continue
        worst_cross = max(worst_cross, abs(r1 - r0) / max(abs(r0), 1e-12))

    worst_equi2 = 0.0
    worst_equi3 = 0.0
    n_eff2 = 0
    n_eff3 = 0
    for _ in range(n_equivariance):
        # second order: step then transform == transform then step
        # (oracle fold sits at x = 1; stay well below it)
        x0 = 0.2 + 0.5 * rng.random()
        h = 0.01 + 0.05 * rng.random()
        gamma = 0.5 + rng.random()
        orc = SecondOrderExact(gamma=gamma, C=gamma, y_b=float(rng.standard_normal()))
        st = init_second_order(x0, orc.value(x0), x0 + h, orc.value(x0 + h),
                               orc.ode_gamma)
        pts = geometry.Stencil4((
            (st.x_prev, st.y_prev), (st.x_cur, st.y_cur),
            (st.x_cur + 1.0, st.y_cur), (st.x_cur + 2.0, st.y_cur)))
        g = _random_group_2d(rng, pts)
        try:
            stepped = step_second_order(st)
            lhs = geometry.apply_2d(g, (stepped.x_cur, stepped.y_cur))
            p0 = geometry.apply_2d(g, (st.x_prev, st.y_prev))
            p1 = geometry.apply_2d(g, (st.x_cur, st.y_cur))
            if p1[0] <= p0[0]:
                continue
            st_g = init_second_order(p0[0], p0[1], p1[0], p1[1], orc.ode_gamma)
            rhs_pt = step_second_order(st_g)
        except Sl2OdeError:
            continue      # the element moved the stencil out of the domain
        scale = max(abs(lhs[0]), abs(lhs[1]), 1.0)
        n_eff2 += 1
        worst_equi2 = max(worst_equi2,
                          abs(lhs[0] - rhs_pt.x_cur) / scale,
                          abs(lhs[1] - rhs_pt.y_cur) / scale)

        # third order strict, power-law F
        alpha = -1.0
        st3 = init_third_order(1.0, 1.0, 10.0, -4.0, 0.02 + 0.04 * rng.random(),
                               alpha=alpha, mode="strict")
        stencil3 = geometry.Stencil4((st3.p0, st3.p1, st3.p2,
                                      (st3.p2[0] + 1.0, st3.p2[1])))
        g3 = _random_group_2d(rng, stencil3)
        try:
            stepped3 = step_third_order_explicit(st3)
            lhs3 = geometry.apply_2d(g3, stepped3.p2)
            q0 = geometry.apply_2d(g3, st3.p0)
            q1 = geometry.apply_2d(g3, st3.p1)
            q2 = geometry.apply_2d(g3, st3.p2)
            if not (q0[0] < q1[0] < q2[0]):
                continue
            I_g = geometry.lattice_invariant(*q0, *q1)
            st3_g = ThirdOrderState(q0, q1, q2, I1=I_g, gamma_lat=1.0,
                                    F=power_law_F(alpha), alpha=alpha, mode="strict")
            rhs3 = step_third_order_explicit(st3_g).p2
        except Sl2OdeError:
            continue
        scale3 = max(abs(lhs3[0]), abs(lhs3[1]), 1.0)
        n_eff3 += 1
        worst_equi3 = max(worst_equi3, abs(lhs3[0] - rhs3[0]) / scale3,
                          abs(lhs3[1] - rhs3[1]) / scale3)

    worst_schwarz = 0.0
    for _ in range(n_equivariance):
        ss = init_schwarz(0.5, float(rng.standard_normal()),
                          1.0 + rng.random(), float(rng.standard_normal()),
                          0.05, lambda x: 0.0)
        g1 = _random_group_1d(rng)
        try:
            lhs_y = geometry.apply_1d(g1, step_schwarz(ss).y_np1)
            moved = SchwarzState(geometry.apply_1d(g1, ss.y_nm1),
                                 geometry.apply_1d(g1, ss.y_n),
                                 geometry.apply_1d(g1, ss.y_np1),
                                 ss.x_cur, ss.h, ss.F)
            rhs_y = step_schwarz(moved).y_np1
        except Sl2OdeError:
            continue
        worst_schwarz = max(worst_schwarz,
                            abs(lhs_y - rhs_y) / max(abs(lhs_y), 1.0))

    report = ExperimentReport(meta={"seed": seed,
                                    "n_invariance": n_invariance,
                                    "n_equivariance": n_equivariance,
                                    "n_effective_equi2": n_eff2,
                                    "n_effective_equi3": n_eff3})
    report.errors = [{
        "diff_invariants_max_rel": worst_diff,
        "cross_ratio_max_rel": worst_cross,
        "equivariance2_max_rel": worst_equi2,
        "equivariance3_max_rel": worst_equi3,
        "schwarz_equivariance_max_rel": worst_schwarz,
    }]
    report.wall_clock_s = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------

CSV_HEADER = "n,x,y,I1,I2_or_J,err_vs_oracle"


def _fmt(v) -> str:
    if v is None:
        return ""
    f = float(v)
    if math.isnan(f):
        return ""
    return repr(f)


def _traj_rows(traj: Trajectory, ref=None) -> list[str]:
    rows = []
    for n in range(len(traj)):
        err = None
        if ref is not None:
            try:
                err = abs(traj.ys[n] - ref(float(traj.xs[n])))
            except Sl2OdeError:
                err = None
        rows.append(",".join([str(n), _fmt(traj.xs[n]), _fmt(traj.ys[n]),
                              _fmt(traj.I1[n]), _fmt(traj.I2_or_J[n]), _fmt(err)]))
    return rows


def _traj_dict(traj: Trajectory) -> dict:
    d = {
        "scheme": traj.scheme,
        "params": {k: v for k, v in traj.params.items() if not callable(v)},
        "termination": traj.termination,
        "xs": [float(v) for v in traj.xs],
        "ys": [float(v) for v in traj.ys],
        "I1": [None if math.isnan(float(v)) else float(v) for v in traj.I1],
        "I2_or_J": [None if math.isnan(float(v)) else float(v) for v in traj.I2_or_J],
    }
    if traj.failure:
        d["failure"] = traj.failure
    if traj.singularity:
        d["singularity"] = {"x_closest": traj.singularity.x_closest,
                            "index": traj.singularity.index}
    return d


def report_to_dict(report: ExperimentReport) -> dict:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in sorted(v.items())}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, (np.floating, np.integer)):
            return clean(float(v))
        return v

    return {
        "tool_version": _version,
        "meta": clean(report.meta),
        "oracle_id": report.oracle_id,
        "errors": clean(report.errors),
        "drift": clean(report.drift),
        "h_list": clean(report.h_list),
        "endpoint_errors": clean(report.endpoint_errors),
        "slope": clean(report.slope),
        "slope_residual": clean(report.slope_residual),
        "error_ratio": clean(report.error_ratio),
        "singularity_estimate": clean(report.singularity_estimate),
        "singularity_meta": clean(report.singularity_meta),
        "post_branch_max_rel": clean(report.post_branch_max_rel),
        "partial": report.partial,
        "notes": list(report.notes),
        "trajectories": [_traj_dict(t) for t in report.trajectories],
    }


def emit(report: ExperimentReport, format: str, path: str) -> list[str]:
    """Write the report; returns the list of files written.

    CSV emits one file per trajectory (`path` itself for a single trajectory,
    `stem_<k>.ext` otherwise) with the fixed header; JSON emits the whole
    report.  Output is byte-stable for a fixed report.
    """
    import os

    written = []
    try:
        if format == "json":
            payload = json.dumps(report_to_dict(report), sort_keys=True,
                                 indent=1, allow_nan=False)
            with open(path, "w") as fh:
                fh.write(payload)
                fh.write("\n")
            written.append(path)
        elif format == "csv":
            ref = getattr(report, "_csv_reference", None)
            trajs = report.trajectories
            if len(trajs) <= 1:
                targets = [path]
            else:
                stem, ext = os.path.splitext(path)
                targets = [f"{stem}_{k}{ext or '.csv'}" for k in range(len(trajs))]
            if not trajs:
                with open(path, "w") as fh:
                    fh.write(CSV_HEADER + "\n")
                written.append(path)
            for target, traj in zip(targets, trajs):
                row_ref = None if traj.scheme.startswith("exact_") else ref
                with open(target, "w") as fh:
                    fh.write(CSV_HEADER + "\n")
                    for row in _traj_rows(traj, row_ref):
                        fh.write(row + "\n")
                written.append(target)
        else:
            raise ConfigurationError(f"unknown format {format!r}")
    except OSError as e:
        raise ConfigurationError(f"cannot write {path!r}: {e}") from e
    return written


def attach_csv_reference(report: ExperimentReport, ref_callable) -> None:
    """Make emit() fill the err_vs_oracle CSV column from this callable."""
    report._csv_reference = ref_callable
