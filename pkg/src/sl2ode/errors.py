"""Exception and signal types shared across the package.

Two families are distinguished on purpose: hard errors (bad input, broken
configuration) and *signals* that a run driver is expected to consume as
ordinary outcomes (a trajectory reaching a fold is a result, not a bug).
"""

from __future__ import annotations


class Sl2OdeError(Exception):
    """Base class for everything raised by this package."""


class DomainError(Sl2OdeError):
    """Input left the mathematical domain of an operation.

    Examples: nonpositive x where square-root lattice factors are needed,
    y' = 0 under an invariant with y' in the denominator, a projective flow
    crossing its pole, z < 0 under F(z) = alpha * z**1.5.
    """


class DegenerateStencilError(Sl2OdeError):
    """A stencil denominator vanished relative to the operand scale."""


class ConfigurationError(Sl2OdeError):
    """Invalid initial data or experiment configuration (CLI exit code 2)."""


class OracleUnavailableError(Sl2OdeError):
    """A reference solution could not be produced (CLI exit code 3)."""


class SingularityReached(Sl2OdeError):
    """Signal: a stepper hit an exactly vanishing update denominator.

    This is the discrete trace of the solution's fold.  Run drivers catch it,
    record the closest approach and stop; it is not a failure of the scheme.
    """

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class StepFailure(Sl2OdeError):
    """Signal: an implicit step could not be completed.

    Carries diagnostics so harness reports can say *where* and *why* a
    standard scheme gave up (the behavior near singularities that the
    invariant schemes are being compared against).
    """

    def __init__(self, message: str, x: float | None = None, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.x = x
        self.iterations = iterations
        self.residual = residual


# Denominators are compared against this multiple of the operand scale to
# separate analytic degeneracy from mere underflow.
DEGENERACY_RTOL = 1e-14


def check_denominator(den: float, scale: float, what: str) -> None:
    """Raise DegenerateStencilError when `den` is zero at the operand scale."""
    if abs(den) <= DEGENERACY_RTOL * max(scale, 1e-300):
        raise DegenerateStencilError(f"{what}: denominator {den!r} degenerate at scale {scale!r}")
