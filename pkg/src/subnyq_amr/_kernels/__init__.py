"""Hot inner-loop kernels with a compiled backend and a pure-Python fallback.

The Cython extension is used when it has been built; set
``SUBNYQ_AMR_PURE_PYTHON=1`` to force the NumPy implementations.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SUBNYQ_AMR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

neighbor_sum = _impl.neighbor_sum
smooth_apply = _impl.smooth_apply
smooth_adjoint = _impl.smooth_adjoint
soft_threshold = _impl.soft_threshold
project_unit_disc = _impl.project_unit_disc
suppress_nonmax = _impl.suppress_nonmax
smo_solve = _impl.smo_solve

__all__ = [
    "BACKEND",
    "neighbor_sum",
    "smooth_apply",
    "smooth_adjoint",
    "soft_threshold",
    "project_unit_disc",
    "suppress_nonmax",
    "smo_solve",
]
