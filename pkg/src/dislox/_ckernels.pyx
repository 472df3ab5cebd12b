# cython: language_level=3
"""Compiled versions of the P1 elasticity kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def element_stiffness(double[:, ::1] coords, long[:, ::1] tris, double[::1] lam, double[::1] mu):
    cdef Py_ssize_t m = tris.shape[0]
    cdef Py_ssize_t e, i, j
    cdef double b[3]
    cdef double c[3]
    cdef double area, inv, l, mm, d11, bi, ci, bj, cj
    cdef long n0, n1, n2
    out = np.empty((m, 6, 6), dtype=np.float64)
    cdef double[:, :, ::1] K = out
    for e in range(m):
        n0 = tris[e, 0]
        n1 = tris[e, 1]
        n2 = tris[e, 2]
        b[0] = coords[n1, 1] - coords[n2, 1]
        b[1] = coords[n2, 1] - coords[n0, 1]
        b[2] = coords[n0, 1] - coords[n1, 1]
        c[0] = coords[n2, 0] - coords[n1, 0]
        c[1] = coords[n0, 0] - coords[n2, 0]
        c[2] = coords[n1, 0] - coords[n0, 0]
        area = 0.5 * (b[0] * c[1] - b[1] * c[0])
        # area * (grad/(2A)) (x) (grad/(2A)) = products / (4A)
        inv = 1.0 / (4.0 * area)
        l = lam[e]
        mm = mu[e]
        d11 = l + 2.0 * mm
        for i in range(3):
            bi = b[i]
            ci = c[i]
            for j in range(3):
                bj = b[j]
                cj = c[j]
                K[e, 2 * i, 2 * j] = (d11 * bi * bj + mm * ci * cj) * inv
                K[e, 2 * i, 2 * j + 1] = (l * bi * cj + mm * ci * bj) * inv
                K[e, 2 * i + 1, 2 * j] = (l * ci * bj + mm * bi * cj) * inv
                K[e, 2 * i + 1, 2 * j + 1] = (d11 * ci * cj + mm * bi * bj) * inv
    return out


def element_strain(double[:, ::1] coords, long[:, ::1] tris, double[:, ::1] u):
    cdef Py_ssize_t m = tris.shape[0]
    cdef Py_ssize_t e, i
    cdef double b[3]
    cdef double c[3]
    cdef double area, inv, exx, eyy, gxy
    cdef long n[3]
    out = np.empty((m, 3), dtype=np.float64)
    cdef double[:, ::1] eps = out
    for e in range(m):
        n[0] = tris[e, 0]
        n[1] = tris[e, 1]
        n[2] = tris[e, 2]
        b[0] = coords[n[1], 1] - coords[n[2], 1]
        b[1] = coords[n[2], 1] - coords[n[0], 1]
        b[2] = coords[n[0], 1] - coords[n[1], 1]
        c[0] = coords[n[2], 0] - coords[n[1], 0]
        c[1] = coords[n[0], 0] - coords[n[2], 0]
        c[2] = coords[n[1], 0] - coords[n[0], 0]
        area = 0.5 * (b[0] * c[1] - b[1] * c[0])
        inv = 1.0 / (2.0 * area)
        exx = 0.0
        eyy = 0.0
        gxy = 0.0
        for i in range(3):
            exx += b[i] * u[n[i], 0]
            eyy += c[i] * u[n[i], 1]
            gxy += c[i] * u[n[i], 0] + b[i] * u[n[i], 1]
        eps[e, 0] = exx * inv
        eps[e, 1] = eyy * inv
        eps[e, 2] = gxy * inv
    return out
