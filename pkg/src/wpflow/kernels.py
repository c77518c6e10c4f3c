"""Kernel backend selection.

The compiled extension is used when it was built; setting the environment
variable ``WPFLOW_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("WPFLOW_PURE_PYTHON", "").strip() not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
best_path = _compiled.best_path if _compiled is not None else _kernels_py.best_path
