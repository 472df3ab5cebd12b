"""Structured triangulations of the unit square with an axis-aligned interior fault.

Facet tags: bottom 1, right 2, top 3, left 4, top measurement patch 5, fault 10.
Region tags: layer ``k`` (1 from the bottom) outside the Omega_minus box, ``10 + k`` inside.
"""
import numpy as np

from .errors import GeometryError
from .mesh import BoundaryRoles, Mesh

BOTTOM, RIGHT, TOP, LEFT, XI, FAULT = 1, 2, 3, 4, 5, 10
BOX_OFFSET = 10


def _on_grid(v, n):
    k = round(v * n)
    if abs(k - v * n) > 1e-9:
        raise GeometryError(f"coordinate {v} does not lie on the {n}x{n} grid")
    return k


def structured_square(n, fault=None, box=None, layers=(), xi=None):
    """Uniform ``n x n`` square grid split into ``2 n^2`` right triangles.

    Args:
        n: cells per side.
        fault: ``((x0, y0), (x1, y1))`` axis-aligned segment on grid lines, or None.
        box: ``(x0, y0, x1, y1)`` rectangle of Omega_minus cells, or None.
        layers: y-levels of horizontal material interfaces.
        xi: ``(x0, x1)`` measurement patch on the top edge, or None.
    """
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = np.column_stack([a, b, c])
    elements[1::2] = np.column_stack([a, c, d])

    centroids = nodes[elements].mean(axis=1)
    levels = sorted(layers)
    regions = 1 + np.searchsorted(levels, centroids[:, 1])
    if box is not None:
        x0, y0, x1, y1 = box
        for v in box:
            _on_grid(v, n)
        inside = (
            (centroids[:, 0] > x0) & (centroids[:, 0] < x1)
            & (centroids[:, 1] > y0) & (centroids[:, 1] < y1)
        )
        regions = np.where(inside, regions + BOX_OFFSET, regions)

    facets, tags = [], []
    for k in range(n):
        facets.append((nid(k, 0), nid(k + 1, 0)))
        tags.append(BOTTOM)
        facets.append((nid(n, k), nid(n, k + 1)))
        tags.append(RIGHT)
        top = (nid(k + 1, n), nid(k, n))
        mid = (t[k] + t[k + 1]) / 2
        facets.append(top)
        tags.append(XI if xi is not None and xi[0] < mid < xi[1] else TOP)
        facets.append((nid(0, k + 1), nid(0, k)))
        tags.append(LEFT)
    if fault is not None:
        (fx0, fy0), (fx1, fy1) = fault
        i0, j0, i1, j1 = (_on_grid(v, n) for v in (fx0, fy0, fx1, fy1))
        if i0 == i1:
            lo, hi = sorted((j0, j1))
            facets += [(nid(i0, k), nid(i0, k + 1)) for k in range(lo, hi)]
            tags += [FAULT] * (hi - lo)
        elif j0 == j1:
            lo, hi = sorted((i0, i1))
            facets += [(nid(k, j0), nid(k + 1, j0)) for k in range(lo, hi)]
            tags += [FAULT] * (hi - lo)
        else:
            raise GeometryError("structured faults must be horizontal or vertical")
    return Mesh(
        nodes,
        elements,
        regions.astype(np.int64),
        np.array(facets, dtype=np.int64).reshape(-1, 2),
        np.array(tags, dtype=np.int64),
    )


def square_roles(mesh, sigma=(BOTTOM,), omega_minus=None):
    """Boundary roles for a ``structured_square`` mesh: listed edges clamped, the rest free."""
    present = set(mesh.facet_tags.tolist())
    boundary = {BOTTOM, RIGHT, TOP, LEFT, XI} & present
    sigma = set(sigma) & present
    if omega_minus is None:
        omega_minus = {r for r in mesh.region_tags if r > BOX_OFFSET}
    return BoundaryRoles(
        sigma_tags=sigma,
        free_tags=boundary - sigma,
        xi_tags={XI} & present,
        fault_tags={FAULT} & present,
        omega_minus_regions=omega_minus,
    )
