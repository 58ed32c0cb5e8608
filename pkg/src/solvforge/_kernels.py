"""Kernel backend selection.

Prefers the compiled extension, falls back to the pure-Python kernel.
Set FORGE_PURE_PYTHON=1 to force the fallback (useful for benchmarking and
for testing backend parity).
"""

from __future__ import annotations

import os

if os.environ.get("FORGE_PURE_PYTHON"):
    from ._rk4_py import rk4_propagate

    _BACKEND = "python"
else:
    try:
        from ._rk4_cy import rk4_propagate  # type: ignore[attr-defined]

        _BACKEND = "cython"
    except ImportError:
        from ._rk4_py import rk4_propagate

        _BACKEND = "python"

__all__ = ["rk4_propagate", "kernel_backend"]


def kernel_backend() -> str:
    """Name of the active integration kernel: 'cython' or 'python'."""
    return _BACKEND
