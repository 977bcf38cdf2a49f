"""Select the iteration kernel backend at import.

The compiled Cython extension is preferred; set ``NARRATIVE_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

import importlib
import os

CONVERGED, STATIONARY, BUDGET, NONFINITE = range(4)


def load_backend(name: str | None = None):
    """Return the kernel module for ``"cython"`` or ``"python"`` (default: best available)."""
    if name == "python":
        return importlib.import_module("._pykernel", __package__)
    if name == "cython":
        return importlib.import_module("._ckernel", __package__)
    if os.environ.get("NARRATIVE_PURE_PYTHON"):
        return load_backend("python")
    try:
        return load_backend("cython")
    except ImportError:
        return load_backend("python")


backend = load_backend()
BACKEND = backend.BACKEND
