"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
numpy fallback is used. ``HODW_BACKEND=python`` forces the fallback,
``HODW_BACKEND=compiled`` insists on the extension.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load(name: str):
    if name == "python":
        return _kernels_py, False
    try:
        from . import _kernels  # noqa: the compiled module may not exist
        return _kernels, True
    except ImportError:
        if name == "compiled":
            raise RuntimeError(
                "HODW_BACKEND=compiled but the hodw._kernels extension "
                "is not built")
        return _kernels_py, False


kernels, COMPILED = _load(os.environ.get("HODW_BACKEND", "auto"))
BACKEND_NAME = "compiled" if COMPILED else "python"


def get_kernels(name: str = "auto"):
    """Return a kernel module by name; used by tests and benchmarks."""
    return _load(name)[0]
