"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set DISCLAB_PURE_PYTHON=1 to force the numpy lane (used by the lane
equivalence tests and the benchmark).
"""

import os

if os.environ.get("DISCLAB_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
rk4_bump_flow = _impl.rk4_bump_flow


def backends():
    """All importable kernel backends, keyed by name."""
    from . import _kernels_py

    found = {_kernels_py.BACKEND: _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found[_kernels.BACKEND] = _kernels
    return found
