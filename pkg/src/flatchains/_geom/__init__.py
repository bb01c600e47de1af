"""Geometry kernel backend selection.

The hot kernels (hyperplane splitting of simplices and signed volumes) exist
twice: a Cython extension built at install time and a pure-Python twin with
identical semantics. The compiled backend is used when importable; set
FLATCHAINS_BACKEND=python to force the fallback (the benchmark does).
"""

import os

from . import py_kernels

_forced = os.environ.get("FLATCHAINS_BACKEND", "").lower()

if _forced == "python":
    _impl = py_kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = py_kernels
        BACKEND = "python"

split_simplex = _impl.split_simplex
signed_volume = _impl.signed_volume


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return py_kernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
