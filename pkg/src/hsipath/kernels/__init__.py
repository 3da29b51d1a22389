"""Hot numeric kernels with two interchangeable backends.

The numba backend compiles the per-pixel loops; the numpy backend is a
pure-NumPy twin used when numba is unavailable or when the environment
variable HSIPATH_BACKEND=numpy forces it. Both implement identical
math; backend-agreement tests pin them together.

HSIPATH_WORKERS caps the numba thread count (default: numba's own).
"""

from __future__ import annotations

import os

from ..errors import ValidationError

_requested = os.environ.get("HSIPATH_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValidationError(
        "HSIPATH_BACKEND must be 'numba' or 'numpy', got %r" % _requested
    )

BACKEND = "numpy"
if _requested in ("", "numba"):
    try:
        import numba  # noqa: F401

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        BACKEND = "numpy"

if BACKEND == "numba":
    import numba

    workers = os.environ.get("HSIPATH_WORKERS", "").strip()
    if workers:
        try:
            n = int(workers)
        except ValueError:
            raise ValidationError(
                "HSIPATH_WORKERS must be an integer, got %r" % workers
            ) from None
        if n < 1:
            raise ValidationError("HSIPATH_WORKERS must be >= 1")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))

    from .pri_numba import pri_iterate, pri_scan
    from .knn_numba import knn_scan
    from .neighbors_numba import neighbor_scan
else:
    from .pri_numpy import pri_iterate, pri_scan
    from .knn_numpy import knn_scan
    from .neighbors_numpy import neighbor_scan

__all__ = ["BACKEND", "pri_iterate", "pri_scan", "knn_scan", "neighbor_scan"]
