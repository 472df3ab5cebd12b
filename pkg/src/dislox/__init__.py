"""Finite-element solvers for elastic dislocations on buried faults."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
