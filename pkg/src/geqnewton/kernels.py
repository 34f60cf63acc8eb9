"""Backend selection for the dense kernels.

The compiled extension is preferred; setting ``GEQNEWTON_PURE_PYTHON=1``
forces the numpy fallback (used by the benchmark and the backend tests).
"""
import os

from geqnewton import _kernels_py

if os.environ.get("GEQNEWTON_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from geqnewton import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

lu_factor = _impl.lu_factor
lu_solve = _impl.lu_solve
lemke = _impl.lemke

SOLVED = _kernels_py.SOLVED
RAY = _kernels_py.RAY
DEGENERATE = _kernels_py.DEGENERATE
MAX_PIVOTS = _kernels_py.MAX_PIVOTS


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from geqnewton import _kernels_c
    except ImportError:
        pass
    else:
        out["cython"] = _kernels_c
    return out
