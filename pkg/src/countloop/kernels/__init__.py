"""Hot geometry kernels with a numba fast path and a pure-numpy fallback.

Backend selection is controlled by the COUNTLOOP_NUMBA environment variable
at import time:

  COUNTLOOP_NUMBA=1      require numba (ImportError if unavailable)
  COUNTLOOP_NUMBA=0      force the pure-numpy path
  unset / "auto"         use numba when importable, else numpy

``BACKEND`` records the active choice. benchmarks/bench_kernels.py compares
the two paths side by side.
"""

from __future__ import annotations

import os

_FALSY = ("0", "false", "off", "no")
_TRUTHY = ("1", "true", "on", "yes")


def _select_backend() -> str:
    flag = os.environ.get("COUNTLOOP_NUMBA", "auto").strip().lower()
    if flag in _FALSY:
        return "numpy"
    if flag in _TRUTHY:
        return "numba"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _select_backend()

if BACKEND == "numba":
    from .numba_impl import iou_matrix, nn_distances, relax_boxes, violating_pairs
else:
    from .numpy_impl import iou_matrix, nn_distances, relax_boxes, violating_pairs

__all__ = ["BACKEND", "relax_boxes", "violating_pairs", "nn_distances", "iou_matrix"]
