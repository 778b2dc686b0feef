"""Pick the compiled kernels when available; OPALG_PURE_PYTHON=1 forces the fallback."""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("OPALG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

mgs_rows = kernels.mgs_rows
rtp_gram = kernels.rtp_gram
