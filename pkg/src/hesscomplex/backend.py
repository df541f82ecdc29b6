"""Kernel backend selection.

The hot numeric kernels exist twice: a numba-jitted version and a pure
numpy version.  The environment variable ``HESSCOMPLEX_BACKEND`` picks one:

* ``numba`` (or unset, when numba imports): jitted kernels,
* ``numpy``: vectorized fallbacks, e.g. for debugging or when numba is
  unavailable.

``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

_env = os.environ.get("HESSCOMPLEX_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"HESSCOMPLEX_BACKEND must be 'auto', 'numba' or 'numpy', got {_env!r}"
    )

if _env == "numpy":
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _env == "numba":
            raise
        NUMBA_ENABLED = False


def use_numba() -> bool:
    return NUMBA_ENABLED
