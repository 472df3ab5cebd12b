"""Kernel dispatch: compiled Cython kernels when importable, numpy otherwise.

Set ``DISLOX_PURE_PYTHON=1`` to force the numpy path.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("DISLOX_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def element_stiffness(coords, tris, lam, mu):
    return _impl.element_stiffness(
        np.ascontiguousarray(coords, dtype=np.float64),
        np.ascontiguousarray(tris, dtype=np.int64),
        np.ascontiguousarray(lam, dtype=np.float64),
        np.ascontiguousarray(mu, dtype=np.float64),
    )


def element_strain(coords, tris, u):
    return _impl.element_strain(
        np.ascontiguousarray(coords, dtype=np.float64),
        np.ascontiguousarray(tris, dtype=np.int64),
        np.ascontiguousarray(u, dtype=np.float64),
    )


element_geometry = _kernels_py.element_geometry
strain_matrices = _kernels_py.strain_matrices
