"""Hot-loop recursions with a compiled core and a pure-Python fallback.

The Cython extension is preferred when importable; set TICKFOLIO_PURE_PYTHON=1
to force the fallback (used by the benchmark and backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("TICKFOLIO_PURE_PYTHON", "") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _cykernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

SQRT_2_OVER_PI = _pykernels.SQRT_2_OVER_PI

arma_residuals = _impl.arma_residuals
kalman_arma_loglik = _impl.kalman_arma_loglik
garch_filter = _impl.garch_filter
egarch_filter = _impl.egarch_filter

__all__ = [
    "BACKEND",
    "SQRT_2_OVER_PI",
    "arma_residuals",
    "kalman_arma_loglik",
    "garch_filter",
    "egarch_filter",
]
