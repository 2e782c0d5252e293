"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``DUELFUEL_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

BACKEND = "python"
kernel = _pykernel

if os.environ.get("DUELFUEL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernel
    except ImportError:  # extension not built
        pass
    else:
        kernel = _ckernel
        BACKEND = "cython"

simulate_batch = kernel.simulate_batch
trunc_conv2d = kernel.trunc_conv2d
