"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
``FIMBEAM_PURE_PYTHON`` environment variable is set to a non-empty value,
the numpy implementation takes over.  Both produce the same numbers to
floating-point rounding.
"""

import os

from . import _pykernels

if os.environ.get("FIMBEAM_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

duality_multipliers = _impl.duality_multipliers
evaluate = _impl.evaluate
