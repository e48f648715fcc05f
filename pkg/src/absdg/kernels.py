"""Kernel backend selection.

The compiled extension is used when available; the numpy fallback is always
present.  Selection can be forced with the ABSDG_BACKEND environment variable
('cython' or 'python') or per-context via the ``backend`` argument.
"""

import os

from . import _kernels_np

try:
    from . import _kernels as _cython_kernel

    HAVE_CYTHON = True
except ImportError:  # pure-Python checkout or failed build
    _cython_kernel = None
    HAVE_CYTHON = False


def get_backend(name=None):
    """Resolve a backend module by name ('auto', 'python', 'cython')."""
    if name is None:
        name = os.environ.get("ABSDG_BACKEND", "auto")
    if name in ("auto", None):
        return _cython_kernel if HAVE_CYTHON else _kernels_np
    if name == "python":
        return _kernels_np
    if name == "cython":
        if not HAVE_CYTHON:
            raise RuntimeError("compiled kernel extension is not available")
        return _cython_kernel
    raise ValueError(f"unknown backend '{name}'")


def backend_name(module=None):
    mod = module if module is not None else get_backend()
    return "cython" if mod is _cython_kernel and mod is not None else "python"
