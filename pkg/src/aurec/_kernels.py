"""Kernel backend selected at import: compiled ``_core`` if present, else NumPy.

Set ``AUREC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("AUREC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

lk_track_level = _impl.lk_track_level
viterbi = _impl.viterbi
jacobi_eigh = _impl.jacobi_eigh
