"""Select the counting kernel implementation at import time.

Set ``RARE_RULES_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels

if os.environ.get("RARE_RULES_BACKEND", "").lower() == "python":
    kernels = _pykernels
    compiled_kernels = None
else:
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:
        compiled_kernels = None
    kernels = compiled_kernels if compiled_kernels is not None else _pykernels

BACKEND = "cython" if kernels is not _pykernels else "python"
