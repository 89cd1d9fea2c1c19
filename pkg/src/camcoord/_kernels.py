"""Kernel backend selection.

The compiled extension is used when importable; ``CAMCOORD_PURE_PYTHON=1``
forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("CAMCOORD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

line_cells = _impl.line_cells
visibility_mask = _impl.visibility_mask
triangle_counts = _impl.triangle_counts
plan_deltas = _impl.plan_deltas

__all__ = ["BACKEND", "line_cells", "visibility_mask", "triangle_counts", "plan_deltas"]
