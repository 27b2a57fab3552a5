"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``MPPC_NRF_BACKEND=python`` forces the numpy fallback.
"""
import importlib
import os

_CHOICES = ("cython", "python")


def load(name=None):
    """Return the kernel module for ``name`` (``None`` picks the best available)."""
    if name is None:
        name = os.environ.get("MPPC_NRF_BACKEND", "").strip().lower() or None
    if name not in (None, *_CHOICES):
        raise ValueError(f"unknown backend {name!r}; expected one of {_CHOICES}")
    if name in (None, "cython"):
        try:
            return importlib.import_module("mppc_nrf._kernels")
        except ImportError:
            if name == "cython":
                raise
    return importlib.import_module("mppc_nrf._fallback")


def available():
    names = ["python"]
    try:
        importlib.import_module("mppc_nrf._kernels")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


kernels = load()
BACKEND = kernels.NAME
