"""Kernel backend selection.

The hot inner loops (CSR aggregation, one-sided Jacobi rotations, power
iteration) exist twice: a numba-compiled version and a pure-numpy fallback.
``OVERSMOOTH_BACKEND=numpy`` forces the fallback; ``numba`` requires numba
and fails loudly if it is missing. By default numba is used when importable.
"""

from __future__ import annotations

import os

_requested = os.environ.get("OVERSMOOTH_BACKEND", "auto").strip().lower()
if _requested not in {"auto", "numba", "numpy"}:
    raise RuntimeError(
        f"OVERSMOOTH_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested in {"auto", "numba"}


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
