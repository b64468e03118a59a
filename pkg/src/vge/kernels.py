"""Backend selection for the hot loops.

The compiled extension ``vge._kernels`` is used when it imports; otherwise
the pure-Python twin in ``vge._kernels_py``.  Setting ``VGE_FORCE_PYTHON=1``
forces the fallback.
"""
import math
import os

import numpy as np

from . import _kernels_py
from .errors import ResourceLimitError

if os.environ.get("VGE_FORCE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py
        BACKEND = "python"

DEFAULT_CAP = 10**8


def backends():
    """Available kernel modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:  # pragma: no cover
        pass
    return out


def accumulate_paths(indptr, succ, succ_len, init_state, init_len, weight, grid,
                     z=math.nan, cap=DEFAULT_CAP, impl=None):
    """Cumulative path statistics at each grid radius.

    Returns a dict of cumulative arrays ``counts``, ``w0``, ``w1``, ``w2``,
    ``wexp`` and the number of visited nodes.  Raises
    :class:`ResourceLimitError` when more than ``cap`` paths are visited.
    """
    impl = impl or _impl
    grid = np.asarray(grid, dtype=float)
    if grid.size and np.any(np.diff(grid) < 0):
        raise ValueError("grid must be nondecreasing")
    counts, w0, w1, w2, we, nodes, overflow = impl.accumulate_paths(
        np.asarray(indptr, dtype=np.int64),
        np.asarray(succ, dtype=np.int64),
        np.asarray(succ_len, dtype=float),
        np.asarray(init_state, dtype=np.int64),
        np.asarray(init_len, dtype=float),
        np.asarray(weight, dtype=float),
        grid,
        float(z),
        int(cap),
    )
    if overflow:
        raise ResourceLimitError(cap)
    return {
        "counts": np.cumsum(counts),
        "w0": np.cumsum(w0),
        "w1": np.cumsum(w1),
        "w2": np.cumsum(w2),
        "wexp": np.cumsum(we),
        "nodes": int(nodes),
    }


def trace_ray(*args, impl=None):
    return (impl or _impl).trace_ray(*args)
