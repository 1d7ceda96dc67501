"""Selects the compiled kernels when available, else the NumPy fallback.

Set ``HODYN_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if os.environ.get("HODYN_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import (action_payoffs, gibbs_blocks, ld_rhs,  # noqa: F401
                              reduced_gibbs_blocks, zd_rhs)
else:
    try:
        from ._kernels import (action_payoffs, gibbs_blocks, ld_rhs,  # noqa: F401
                               reduced_gibbs_blocks, zd_rhs)
        BACKEND = "compiled"
    except ImportError:
        from ._kernels_py import (action_payoffs, gibbs_blocks, ld_rhs,  # noqa: F401
                                  reduced_gibbs_blocks, zd_rhs)
