"""Kernel backend selection.

Prefers the compiled extension, falls back to the NumPy implementation.
Set ``KGAUDIT_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by tests that cross-check both backends).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("KGAUDIT_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py


def kernel_backend() -> str:
    """Name of the active kernel implementation: ``compiled`` or ``python``."""
    return kernels.IMPLEMENTATION
