"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``ADAPTKIT_PURE_PYTHON=1`` is set, the numpy/Python fallback is used.
"""

import os

from . import _pykernels

if os.environ.get("ADAPTKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

exchange_sweep = _impl.exchange_sweep
lattice_estep = _impl.lattice_estep

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
else:
    try:
        from . import _kernels as _compiled
        BACKENDS["cython"] = _compiled
    except ImportError:
        pass


def get_backend(name=None):
    """Module implementing the kernels; ``None`` means the active one."""
    if name is None:
        return _impl
    return BACKENDS[name]
