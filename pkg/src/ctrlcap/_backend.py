"""Select the compiled kernels when available, else the numpy versions.

Set ``CTRLCAP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

NAME = "python"
waterfill_iterate = _kernels_py.waterfill_iterate
em_final_state = _kernels_py.em_final_state

if os.environ.get("CTRLCAP_PURE_PYTHON") != "1":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        NAME = "cython"
        waterfill_iterate = _kernels.waterfill_iterate
        em_final_state = _kernels.em_final_state

__all__ = ["NAME", "waterfill_iterate", "em_final_state"]
