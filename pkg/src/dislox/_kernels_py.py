"""Numpy implementations of the P1 elasticity kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop by loop.
"""
import numpy as np


def element_geometry(coords, tris):
    """Return ``(b, c, area)`` where ``grad N_i = (b_i, c_i) / (2 area)``."""
    p = coords[tris]
    x, y = p[..., 0], p[..., 1]
    b = y[:, [1, 2, 0]] - y[:, [2, 0, 1]]
    c = x[:, [2, 0, 1]] - x[:, [1, 2, 0]]
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    return b, c, area


def strain_matrices(coords, tris):
    """Voigt strain-displacement matrices ``B`` of shape (M, 3, 6) and element areas."""
    b, c, area = element_geometry(coords, tris)
    inv = 1.0 / (2.0 * area)
    dx = b * inv[:, None]
    dy = c * inv[:, None]
    B = np.zeros((len(tris), 3, 6))
    B[:, 0, 0::2] = dx
    B[:, 1, 1::2] = dy
    B[:, 2, 0::2] = dy
    B[:, 2, 1::2] = dx
    return B, area


def element_stiffness(coords, tris, lam, mu):
    """Plane-strain P1 element matrices ``area * B^T D B``, shape (M, 6, 6)."""
    B, area = strain_matrices(coords, tris)
    D = np.zeros((len(tris), 3, 3))
    D[:, 0, 0] = D[:, 1, 1] = lam + 2.0 * mu
    D[:, 0, 1] = D[:, 1, 0] = lam
    D[:, 2, 2] = mu
    return np.einsum("e,eki,ekl,elj->eij", area, B, D, B, optimize=True)


def element_strain(coords, tris, u):
    """Constant Voigt strain ``(exx, eyy, gxy)`` per element from nodal displacements (N, 2)."""
    B, _ = strain_matrices(coords, tris)
    ue = u[tris].reshape(len(tris), 6)
    return np.einsum("eij,ej->ei", B, ue)
