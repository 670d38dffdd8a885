"""Select the kernel implementation at import time.

The compiled extension is preferred.  ``PERC_LAB_BACKEND=python`` forces the
numpy/pure-Python fallback, ``PERC_LAB_BACKEND=compiled`` makes a missing
extension an import error.
"""

import importlib
import os


def load(name=None):
    """Return the kernel module for ``name`` ('compiled', 'python' or None)."""
    if name is None:
        name = os.environ.get("PERC_LAB_BACKEND", "").strip().lower() or None
    if name == "python":
        return importlib.import_module("perclab._purepy")
    try:
        return importlib.import_module("perclab._kernels")
    except ImportError:
        if name == "compiled":
            raise
        return importlib.import_module("perclab._purepy")


kernels = load()
BACKEND = "compiled" if kernels.__name__.endswith("_kernels") else "python"
