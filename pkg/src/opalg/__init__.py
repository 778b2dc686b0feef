"""Relative tensor products and fiber products over finite-dimensional C*-bases."""

from ._backend import BACKEND
from .linalg import Tolerance, DEFAULT_TOL

__all__ = ["BACKEND", "Tolerance", "DEFAULT_TOL", "__version__"]

__version__ = "0.1.0"
