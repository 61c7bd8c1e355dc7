"""Symmetry-preserving discretization of SL(2,R)-invariant ODEs.

Invariant difference schemes for the second- and third-order equations of
the plane realization and for the Schwarzian equation of the Moebius
realization, together with standard finite-difference and Runge-Kutta
baselines, exact-solution oracles and a benchmark harness.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateStencilError, DomainError,
                     OracleUnavailableError, SingularityReached, Sl2OdeError,
                     StepFailure)
from .geometry import (DiffInvariants2D, GroupElement1D, GroupElement2D,
                       JetPoint, Stencil4, apply_1d, apply_2d,
                       cont_invariants_2d, cross_ratio, diff_invariants_2d,
                       J1, K_invariant, lattice_invariant, schwarzian)
from .invariant_schemes import (SchwarzState, SecondOrderState,
                                ThirdOrderState, init_schwarz,
                                init_second_order, init_third_order,
                                power_law_F, run, step_schwarz,
                                step_second_order, step_third_order_explicit,
                                step_third_order_gamma,
                                step_third_order_implicit)
from .oracles import (SecondOrderExact, ThirdOrderImplicit, exact_second_order,
                      fit_constants, reconstruct_y, singularity_x, solve_f)
from .standard_schemes import (RKConfig, UniformGrid, fd_explicit_second_order,
                               fd_step_second_order, fd_step_third_order,
                               make_rhs, rk_reference, run_fd_second_order,
                               run_fd_third_order)
from .trajectory import StopCriteria, Trajectory

__all__ = [name for name in dir() if not name.startswith("_")]
