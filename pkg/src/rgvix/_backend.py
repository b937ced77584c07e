"""Backend selection: compiled filter kernels with a pure-Python fallback.

Set RGVIX_PURE_PYTHON=1 to force the fallback (used by the test suite and
the benchmark to compare the two implementations).
"""

import os

_FORCE_PYTHON = os.environ.get("RGVIX_PURE_PYTHON", "0") in ("1", "true", "True")

if _FORCE_PYTHON:
    from rgvix import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from rgvix import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from rgvix import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"
