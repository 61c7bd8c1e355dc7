"""Trajectory containers and stopping rules shared by all run drivers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Termination reasons (string ids are what lands in reports and CSV metadata).
REASON_XMAX = "x_max"
REASON_STEPS = "step_limit"
REASON_SINGULARITY = "singularity"
REASON_POSTFOLD_EXIT = "post_fold_exit"
REASON_STEP_FAILURE = "step_failure"
REASON_DOMAIN = "domain"
REASON_NONFINITE = "nonfinite"


@dataclass
class StopCriteria:
    """When to stop a run.

    A run always stops on x >= x_max or on the step budget.  After a fold
    (the x-update reversing direction) the same update formulas keep running
    down the second branch; the run then stops once x drops below x_min.
    With continue_through_fold=False the run stops at the fold itself.
    """

    x_max: float = float("inf")
    max_steps: int = 10_000
    x_min: Optional[float] = None
    continue_through_fold: bool = True


@dataclass
class SingularityInfo:
    x_closest: float
    index: int
    max_slope: float = float("nan")


@dataclass
class Trajectory:
    """Ordered points plus per-step conserved quantities and run metadata.

    `I1[i]` is the lattice invariant between points i-1 and i; `I2_or_J[i]`
    is the scheme's conserved/monitored quantity at point i (I2 for the
    second-order scheme, J1 for the third-order ones, the cross-ratio for the
    Schwarzian scheme).  Leading entries that need more history are NaN.
    """

    xs: np.ndarray
    ys: np.ndarray
    I1: np.ndarray
    I2_or_J: np.ndarray
    scheme: str
    params: dict = field(default_factory=dict)
    termination: str = REASON_STEPS
    singularity: Optional[SingularityInfo] = None
    failure: Optional[dict] = None

    def __len__(self) -> int:
        return len(self.xs)

    def detect_fold(self) -> Optional[SingularityInfo]:
        """Closest-approach bookkeeping: the first x-reversal, if any."""
        xs = self.xs
        if len(xs) < 3:
            return None
        dx = np.diff(xs)
        rev = np.nonzero(dx[1:] * dx[:-1] < 0)[0]
        if len(rev) == 0:
            return None
        i = int(rev[0]) + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = np.abs(np.diff(self.ys) / dx)
        msl = float(np.nanmax(slopes)) if len(slopes) else float("nan")
        return SingularityInfo(x_closest=float(xs[i]), index=i, max_slope=msl)

    def finalize(self) -> "Trajectory":
        if self.singularity is None:
            self.singularity = self.detect_fold()
        return self
