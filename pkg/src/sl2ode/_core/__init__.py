"""Backend selection for the hot trajectory loops.

The compiled Cython kernels are used when the extension built; otherwise the
pure-Python reference loops take over.  `SL2ODE_PURE_PYTHON=1` forces the
fallback (the benchmark and the twin-equality tests use this).  Both backends
are op-for-op twins and produce bitwise-identical trajectories.
"""

from __future__ import annotations

import os

from . import _pyloops

STOP_STEPS = _pyloops.STOP_STEPS
STOP_XMAX = _pyloops.STOP_XMAX
STOP_SINGULARITY = _pyloops.STOP_SINGULARITY
STOP_POSTFOLD_EXIT = _pyloops.STOP_POSTFOLD_EXIT
STOP_DOMAIN = _pyloops.STOP_DOMAIN
STOP_NONFINITE = _pyloops.STOP_NONFINITE

if os.environ.get("SL2ODE_PURE_PYTHON"):
    _impl = _pyloops
    BACKEND = "python"
else:
    try:
        from . import _fastloops as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _pyloops
        BACKEND = "python"

run_second_order = _impl.run_second_order
run_third_strict_power = _impl.run_third_strict_power
run_schwarz = _impl.run_schwarz


def get_backend(name: str | None = None):
    """Return the loop namespace for `name` ('cython'/'python'/None=active)."""
    if name is None:
        return _impl
    if name == "python":
        return _pyloops
    if name == "cython":
        from . import _fastloops  # raises ImportError when not built
        return _fastloops
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _fastloops  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names
