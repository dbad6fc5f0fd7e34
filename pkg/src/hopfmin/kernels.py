"""Backend dispatch for the hot kernels.

Set HOPFMIN_BACKEND=numpy to force the pure-numpy fallback; the default is
the numba backend when numba imports cleanly.  The choice is fixed at
import time and reported in :data:`BACKEND`.
"""

from __future__ import annotations

import os

from ._kernels_numpy import KIND_DIRICHLET, KIND_DISTORTION, deriv_coeffs

_requested = os.environ.get("HOPFMIN_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"HOPFMIN_BACKEND={_requested!r} not understood (use 'numba' or 'numpy')")

if _requested == "numpy":
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba  # noqa: F401
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        BACKEND = "numpy"

if BACKEND == "numba":
    from ._kernels_numba import energy_grad, flip_cap, locate, tri_derivs
else:
    from ._kernels_numpy import energy_grad, flip_cap, locate, tri_derivs

__all__ = [
    "BACKEND",
    "KIND_DIRICHLET",
    "KIND_DISTORTION",
    "deriv_coeffs",
    "energy_grad",
    "flip_cap",
    "locate",
    "tri_derivs",
]
