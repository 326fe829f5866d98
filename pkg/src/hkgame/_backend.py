"""Pick the RK4 kernel at import: compiled if built, numpy otherwise.

Set ``HKGAME_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _rk4_py

if os.environ.get("HKGAME_PURE_PYTHON"):
    rk4_linear = _rk4_py.rk4_linear
    BACKEND = "python"
else:
    try:
        from ._rk4 import rk4_linear
        BACKEND = "cython"
    except ImportError:
        rk4_linear = _rk4_py.rk4_linear
        BACKEND = "python"

__all__ = ["BACKEND", "rk4_linear"]
