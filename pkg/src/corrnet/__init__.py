"""Correlation networks of daily stock returns and sector clustering statistics."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
