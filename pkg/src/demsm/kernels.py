"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; otherwise the pure-Python
twin. Set ``DEMSM_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("DEMSM_PURE_PYTHON"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

quantile_index = _impl.quantile_index
check_loss = _impl.check_loss
check_loss_at_quantile = _impl.check_loss_at_quantile
greedy_box = _impl.greedy_box
grid_scan = _impl.grid_scan

__all__ = [
    "BACKEND",
    "quantile_index",
    "check_loss",
    "check_loss_at_quantile",
    "greedy_box",
    "grid_scan",
]
