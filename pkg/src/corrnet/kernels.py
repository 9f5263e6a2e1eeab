"""Kernel backend selection.

The compiled extension is used when importable; ``CORRNET_BACKEND=python``
forces the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("CORRNET_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass

pairwise_pearson = _impl.pairwise_pearson


def backends():
    """Map backend name to module for every importable implementation."""
    out = {"python": _pykernels}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
