"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback keeps the package
importable from a source tree without a build step. Set GVPLAN_PURE_PYTHON=1
to force the fallback (used by the backend-comparison benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GVPLAN_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

HAVE_EXTENSION = kernels.IS_COMPILED


def available_lanes() -> int:
    """Schedulable CPU count for the parallel factor stage."""
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def resolve_threads(requested: int) -> int:
    """0 means all available lanes."""
    if requested < 0:
        raise ValueError("thread count must be >= 0")
    return requested if requested > 0 else available_lanes()
