"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``SDCKIT_PURE_PYTHON=1`` to force the numpy versions.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SDCKIT_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def sq_dists(num, codes, tables, pnum, pcodes):
    return _impl.sq_dists(num, codes, tables, pnum, pcodes)


def linkage(num_o, codes_o, num_m, codes_m, tables, tol=1e-9):
    return _impl.linkage(num_o, codes_o, num_m, codes_m, tables, float(tol))
