"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. Setting ``DECAY_CERT_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("DECAY_CERT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _kernels
        BACKEND = "cython"
    except ImportError:
        _kernels = _pykernels
else:
    _kernels = _pykernels

extremal_kernel = _kernels.extremal_kernel


def get_kernel(backend=None):
    """Return the extremal kernel for ``backend`` (None: the active one)."""
    if backend is None:
        return extremal_kernel
    if backend == "python":
        return _pykernels.extremal_kernel
    if backend == "cython":
        from . import _ckernels
        return _ckernels.extremal_kernel
    raise ValueError(f"unknown backend {backend!r}")
