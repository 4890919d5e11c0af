"""Backend selection for the integer kernels.

The compiled module is used when it was built and ``COHMM_PURE_PYTHON`` is
unset; otherwise the pure-Python module with the same API is loaded.
"""

import os

from . import _pykernels

try:
    if os.environ.get("COHMM_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl
except ImportError:
    _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

Echelon = _impl.Echelon
primitive = _impl.primitive
sparse_matvec = _impl.sparse_matvec


def available_backends():
    """Map backend name to module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
