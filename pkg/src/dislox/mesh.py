"""Simplicial meshes with region and facet tags, fault topology and node splitting.

The ``dmesh v1`` text format::

    dmesh 1
    dim 2
    nodes <N>
    <id> <x> <y>
    elements <M>
    <id> <region_tag> <v0> <v1> <v2>
    facets <F>
    <id> <facet_tag> <v0> <v1>

Elements are counter-clockwise triangles. Facets carry tags for the clamped
boundary, the traction-free boundary, the measurement patch and the fault.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, GeometryError, MeshSyntaxError, TopologyError

_LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])
_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INTEGER = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle mesh. Ids are dense and zero based.

    Attributes:
        nodes: (N, 2) coordinates in meters.
        elements: (M, 3) vertex indices, counter-clockwise.
        regions: (M,) region tag of each element.
        facets: (F, 2) vertex indices of tagged boundary or interior facets.
        facet_tags: (F,) tag of each facet.
    """

    nodes: np.ndarray
    elements: np.ndarray
    regions: np.ndarray
    facets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    facet_tags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dim: int = 2

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @cached_property
    def areas(self):
        p = self.nodes[self.elements]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @cached_property
    def centroids(self):
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def _edge_data(self):
        local = np.sort(self.elements[:, _LOCAL_EDGES].reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.ravel()
        owners = np.repeat(np.arange(self.n_elements), 3)
        edge_elements = np.full((len(edges), max(2, counts.max(initial=0))), -1, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        grouped = inverse[order]
        slot = np.arange(len(order)) - np.searchsorted(grouped, grouped)
        edge_elements[grouped, slot] = owners[order]
        return edges, edge_elements, inverse.reshape(-1, 3), counts

    @property
    def edges(self):
        """Unique edges (E, 2) with sorted vertex pairs."""
        return self._edge_data[0]

    @property
    def edge_elements(self):
        """(E, 2) adjacent elements per edge; -1 marks the missing neighbour of a boundary edge."""
        return self._edge_data[1][:, :2]

    @property
    def element_edges(self):
        """(M, 3) edge index of local edges (0,1), (1,2), (2,0)."""
        return self._edge_data[2]

    @property
    def boundary_edges(self):
        """Indices of edges with exactly one adjacent element."""
        return np.flatnonzero(self._edge_data[3] == 1)

    def edge_index(self, pairs):
        """Edge indices of vertex pairs; -1 for pairs that are not mesh edges."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        n = self.n_nodes
        keys = self.edges[:, 0] * n + self.edges[:, 1]
        q = pairs[:, 0] * n + pairs[:, 1]
        pos = np.searchsorted(keys, q)
        pos = np.clip(pos, 0, max(len(keys) - 1, 0))
        found = (len(keys) > 0) & (keys[pos] == q) if len(keys) else np.zeros(len(q), bool)
        return np.where(found, pos, -1)

    def facets_with_tags(self, tags):
        """Facet rows whose tag is in ``tags``."""
        return self.facets[np.isin(self.facet_tags, list(tags))]

    def nodes_with_tags(self, tags):
        return np.unique(self.facets_with_tags(tags))

    @property
    def diameter(self):
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    @property
    def region_tags(self):
        return sorted(int(r) for r in np.unique(self.regions))


@dataclass(frozen=True)
class BoundaryRoles:
    """Roles of facet tags and of region tags."""

    sigma_tags: frozenset
    free_tags: frozenset
    xi_tags: frozenset = frozenset()
    fault_tags: frozenset = frozenset()
    omega_minus_regions: frozenset = frozenset()

    def __post_init__(self):
        for name in ("sigma_tags", "free_tags", "xi_tags", "fault_tags", "omega_minus_regions"):
            object.__setattr__(self, name, frozenset(int(t) for t in getattr(self, name)))


@dataclass(frozen=True, eq=False)
class FaultTopology:
    """Fault ``S``, its closed extension ``Gamma = boundary of Omega_minus`` and the split map.

    Facet arrays are oriented so that the Omega_minus element lies on their left;
    the fault normal ``n = (dy, -dx) / |d|`` is therefore the outward normal of Omega_minus.
    """

    s_facets: np.ndarray
    s_normals: np.ndarray
    gamma_facets: np.ndarray
    gamma_nodes: np.ndarray
    s_nodes: np.ndarray
    s_boundary_nodes: np.ndarray
    split_map: dict
    minus_elements: np.ndarray
    s_segments: np.ndarray
    s_boundary_points: np.ndarray
    diameter: float

    @property
    def s_interior_nodes(self):
        return np.array(sorted(self.split_map), dtype=np.int64)

    @property
    def plus_elements(self):
        return ~self.minus_elements

    @cached_property
    def gamma_off_s_facets(self):
        """Gamma facets that are not fault facets."""
        s = {tuple(sorted(f)) for f in self.s_facets.tolist()}
        keep = [i for i, f in enumerate(self.gamma_facets.tolist()) if tuple(sorted(f)) not in s]
        return self.gamma_facets[keep].reshape(-1, 2)


# -- parsing -----------------------------------------------------------------


def _tokens(text):
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line.split()


def _int(tok, line):
    if not _INTEGER.match(tok):
        raise MeshSyntaxError(f"expected integer, got {tok!r}", line)
    return int(tok)


def _float(tok, line):
    if not _DECIMAL.match(tok):
        raise MeshSyntaxError(f"expected decimal literal, got {tok!r}", line)
    return float(tok)


def parse_mesh(text):
    """Parse a ``dmesh v1`` document and validate the mesh invariants.

    Ids in the file may be arbitrary distinct integers; they are re-indexed
    densely from zero in input order.
    """
    lines = list(_tokens(text))
    pos = 0

    def expect(keyword):
        nonlocal pos
        if pos >= len(lines):
            raise MeshSyntaxError(f"unexpected end of document, expected '{keyword}'")
        number, toks = lines[pos]
        if toks[0] != keyword or len(toks) != 2:
            raise MeshSyntaxError(f"expected '{keyword} <value>', got {' '.join(toks)!r}", number)
        pos += 1
        return number, toks[1]

    number, version = expect("dmesh")
    if version != "1":
        raise MeshSyntaxError(f"unsupported dmesh version {version}", number)
    number, dim_tok = expect("dim")
    dim = _int(dim_tok, number)
    if dim != 2:
        raise MeshSyntaxError(f"only dim 2 is supported, got {dim}", number)

    def block(keyword, width):
        nonlocal pos
        number, count_tok = expect(keyword)
        count = _int(count_tok, number)
        if count < 0:
            raise MeshSyntaxError(f"negative {keyword} count", number)
        rows = lines[pos:pos + count]
        if len(rows) < count:
            raise MeshSyntaxError(f"expected {count} {keyword} lines, found {len(rows)}")
        for n, toks in rows:
            if len(toks) != width:
                raise MeshSyntaxError(f"{keyword} line needs {width} fields, got {len(toks)}", n)
        pos += count
        return rows

    node_rows = block("nodes", 3)
    node_ids = {}
    coords = np.empty((len(node_rows), 2))
    for k, (n, toks) in enumerate(node_rows):
        nid = _int(toks[0], n)
        if nid in node_ids:
            raise MeshSyntaxError(f"duplicate node id {nid}", n)
        node_ids[nid] = k
        coords[k] = _float(toks[1], n), _float(toks[2], n)

    def vertices(toks, n):
        out = []
        for tok in toks:
            vid = _int(tok, n)
            if vid not in node_ids:
                raise TopologyError(f"line {n}: vertex id {vid} does not exist")
            out.append(node_ids[vid])
        return out

    elem_rows = block("elements", 5)
    elements = np.empty((len(elem_rows), 3), dtype=np.int64)
    regions = np.empty(len(elem_rows), dtype=np.int64)
    seen = set()
    for k, (n, toks) in enumerate(elem_rows):
        eid = _int(toks[0], n)
        if eid in seen:
            raise MeshSyntaxError(f"duplicate element id {eid}", n)
        seen.add(eid)
        regions[k] = _int(toks[1], n)
        elements[k] = vertices(toks[2:], n)

    facet_rows = block("facets", 4)
    facets = np.empty((len(facet_rows), 2), dtype=np.int64)
    facet_tags = np.empty(len(facet_rows), dtype=np.int64)
    seen = set()
    for k, (n, toks) in enumerate(facet_rows):
        fid = _int(toks[0], n)
        if fid in seen:
            raise MeshSyntaxError(f"duplicate facet id {fid}", n)
        seen.add(fid)
        facet_tags[k] = _int(toks[1], n)
        facets[k] = vertices(toks[2:], n)

    if pos != len(lines):
        raise MeshSyntaxError("trailing content after facets block", lines[pos][0])

    mesh = Mesh(coords, elements, regions, facets, facet_tags, dim)
    validate_mesh(mesh)
    return mesh


def format_mesh(mesh):
    """Serialize to ``dmesh v1``; coordinates use 17 significant digits."""
    out = ["dmesh 1", f"dim {mesh.dim}", f"nodes {mesh.n_nodes}"]
    out += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.nodes.tolist())]
    out.append(f"elements {mesh.n_elements}")
    out += [
        f"{i} {r} {a} {b} {c}"
        for i, (r, (a, b, c)) in enumerate(zip(mesh.regions.tolist(), mesh.elements.tolist()))
    ]
    out.append(f"facets {len(mesh.facets)}")
    out += [
        f"{i} {t} {a} {b}"
        for i, (t, (a, b)) in enumerate(zip(mesh.facet_tags.tolist(), mesh.facets.tolist()))
    ]
    return "\n".join(out) + "\n"


def validate_mesh(mesh):
    """Check orientation, conformity, local non-overlap, connectivity and facet references."""
    if mesh.n_elements == 0:
        raise TopologyError("mesh has no elements")
    if not np.all(np.isfinite(mesh.nodes)):
        raise TopologyError("non-finite node coordinates")
    areas = mesh.areas
    scale = mesh.diameter ** 2
    bad = np.flatnonzero(areas <= 1e-14 * scale)
    if len(bad):
        raise TopologyError(f"element {bad[0]} is inverted or degenerate (area {areas[bad[0]]:.3e})")
    edges, edge_elements, _, counts = mesh._edge_data
    if counts.max() > 2:
        e = int(np.argmax(counts))
        raise TopologyError(f"edge {edges[e].tolist()} shared by {counts[e]} elements (non-conforming)")

    # a conforming interior edge is traversed in opposite directions by its two elements
    directed = mesh.elements[:, _LOCAL_EDGES].reshape(-1, 2)
    _, first, dcounts = np.unique(directed, axis=0, return_index=True, return_counts=True)
    if dcounts.max() > 1:
        k = first[np.argmax(dcounts)]
        raise TopologyError(f"elements overlap across edge {directed[k].tolist()} (element {k // 3})")

    # each boundary vertex must see exactly two boundary edges (no hanging nodes, no pinches)
    bedges = edges[counts == 1]
    degree = np.bincount(bedges.ravel(), minlength=mesh.n_nodes)
    bad = np.flatnonzero((degree != 0) & (degree != 2))
    if len(bad):
        raise TopologyError(f"node {bad[0]} has {degree[bad[0]]} boundary edges (non-conforming mesh)")

    interior = np.flatnonzero(counts == 2)
    a, b = edge_elements[interior, 0], edge_elements[interior, 1]
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(mesh.n_elements,) * 2)
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp != 1:
        raise TopologyError(f"mesh has {n_comp} disconnected components")

    used = np.zeros(mesh.n_nodes, bool)
    used[mesh.elements.ravel()] = True
    if not used.all():
        raise TopologyError(f"node {int(np.flatnonzero(~used)[0])} belongs to no element")

    if len(mesh.facets):
        idx = mesh.edge_index(mesh.facets)
        if np.any(idx < 0):
            k = int(np.flatnonzero(idx < 0)[0])
            raise TopologyError(f"facet {k} {mesh.facets[k].tolist()} is not an edge of the mesh")


# -- roles and fault topology ------------------------------------------------


def validate_roles(mesh, roles):
    """Check that the boundary roles tile the boundary and the fault facets are interior."""
    if roles.sigma_tags & roles.free_tags:
        raise GeometryError(f"tags {sorted(roles.sigma_tags & roles.free_tags)} are both clamped and free")
    if not roles.xi_tags <= roles.free_tags:
        raise GeometryError("measurement patch tags must be a subset of the free tags")
    known = set(mesh.facet_tags.tolist())
    for tag in roles.sigma_tags | roles.free_tags | roles.xi_tags | roles.fault_tags:
        if tag not in known:
            raise GeometryError(f"facet tag {tag} does not occur in the mesh")
    unknown = roles.omega_minus_regions - set(mesh.regions.tolist())
    if unknown:
        raise GeometryError(f"region tags {sorted(unknown)} do not occur in the mesh")

    role = np.isin(mesh.facet_tags, list(roles.sigma_tags | roles.free_tags))
    idx = mesh.edge_index(mesh.facets[role])
    counts = np.bincount(idx, minlength=len(mesh.edges))
    boundary = np.zeros(len(mesh.edges), bool)
    boundary[mesh.boundary_edges] = True
    if np.any(counts[~boundary] > 0):
        raise GeometryError("a clamped or free facet lies in the interior of the domain")
    if np.any(counts[boundary] != 1):
        missing = np.flatnonzero(boundary & (counts != 1))
        e = mesh.edges[missing[0]].tolist()
        raise GeometryError(f"boundary edge {e} carries {counts[missing[0]]} roles, expected exactly one")


def build_fault_topology(mesh, roles):
    """Derive ``Gamma`` from the Omega_minus regions and orient the fault on it."""
    validate_roles(mesh, roles)
    minus = np.isin(mesh.regions, list(roles.omega_minus_regions))
    edges, edge_elements = mesh.edges, mesh.edge_elements
    boundary_nodes = np.unique(edges[mesh.boundary_edges])

    b_el = edge_elements[mesh.boundary_edges, 0]
    if np.any(minus[b_el]):
        raise GeometryError("Gamma touches the domain boundary: an Omega_minus element has a boundary edge")

    interior = edge_elements[:, 1] >= 0
    e0, e1 = edge_elements[:, 0], edge_elements[:, 1]
    on_gamma = interior & (minus[e0] != minus[np.where(interior, e1, 0)])
    gamma_idx = np.flatnonzero(on_gamma)
    gamma_nodes = np.unique(edges[gamma_idx])
    if np.intersect1d(gamma_nodes, boundary_nodes).size:
        raise GeometryError("Gamma touches the domain boundary")
    degree = np.bincount(edges[gamma_idx].ravel(), minlength=mesh.n_nodes)
    if np.any(degree[gamma_nodes] != 2):
        raise GeometryError("Gamma is not a closed manifold curve (a node has Gamma-degree != 2)")
    if minus.any():
        sub = np.flatnonzero(minus)
        pos = -np.ones(mesh.n_elements, dtype=np.int64)
        pos[sub] = np.arange(len(sub))
        both = interior & minus[e0] & minus[np.where(interior, e1, 0)]
        graph = coo_matrix((np.ones(both.sum()), (pos[e0[both]], pos[e1[both]])), shape=(len(sub),) * 2)
        if connected_components(graph, directed=False)[0] != 1:
            raise GeometryError("Omega_minus must be connected")

    # orient every Gamma edge along the counter-clockwise boundary of its Omega_minus element
    gamma_facets = _orient(mesh, gamma_idx, minus)

    fault_rows = mesh.facets_with_tags(roles.fault_tags)
    s_idx = mesh.edge_index(fault_rows)
    if np.any(s_idx < 0):
        raise GeometryError("fault facet is not a mesh edge")
    if np.any(~interior[s_idx]):
        raise GeometryError("fault facet lies on the exterior boundary (S must be interior)")
    if not np.all(on_gamma[s_idx]):
        raise GeometryError("fault facet is not on the boundary of Omega_minus")
    s_idx = np.unique(s_idx)
    s_facets = _orient(mesh, s_idx, minus)
    s_nodes = np.unique(s_facets)
    s_degree = np.bincount(s_facets.ravel(), minlength=mesh.n_nodes)
    s_boundary = np.flatnonzero(s_degree == 1)
    if len(s_facets) and len(s_boundary) == 0:
        raise GeometryError("fault covers all of Gamma; S must be an open curve with boundary")
    s_interior = np.setdiff1d(s_nodes, s_boundary)
    split_map = {int(v): mesh.n_nodes + k for k, v in enumerate(s_interior)}

    d = mesh.nodes[s_facets[:, 1]] - mesh.nodes[s_facets[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None] if len(d) else np.zeros((0, 2))
    return FaultTopology(
        s_facets=s_facets,
        s_normals=normals,
        gamma_facets=gamma_facets,
        gamma_nodes=gamma_nodes,
        s_nodes=s_nodes,
        s_boundary_nodes=s_boundary,
        split_map=split_map,
        minus_elements=minus,
        s_segments=mesh.nodes[s_facets] if len(s_facets) else np.zeros((0, 2, 2)),
        s_boundary_points=mesh.nodes[s_boundary],
        diameter=mesh.diameter,
    )


def _orient(mesh, edge_idx, minus):
    """Return edges as directed pairs following the Omega_minus element's CCW order."""
    out = np.empty((len(edge_idx), 2), dtype=np.int64)
    for k, e in enumerate(edge_idx):
        a, b = mesh.edge_elements[e]
        el = a if minus[a] else b
        tri = mesh.elements[el].tolist()
        u, v = mesh.edges[e]
        i = tri.index(u)
        out[k] = (u, v) if tri[(i + 1) % 3] == v else (v, u)
    return out


def split_fault_nodes(mesh, ft):
    """Duplicate interior fault nodes; Omega_plus elements touching them use the copy.

    The returned mesh has ``N + len(split_map)`` nodes; copy ``ft.split_map[v]``
    sits at the coordinates of ``v``. Fault-boundary nodes are never duplicated.
    """
    if not ft.split_map:
        return mesh
    gamma_degree = np.bincount(ft.gamma_facets.ravel(), minlength=mesh.n_nodes)
    originals = np.array(sorted(ft.split_map), dtype=np.int64)
    if np.any(gamma_degree[originals] != 2):
        raise GeometryError("ambiguous side assignment at a non-manifold fault junction")
    lookup = np.arange(mesh.n_nodes, dtype=np.int64)
    lookup[originals] = [ft.split_map[int(v)] for v in originals]
    elements = mesh.elements.copy()
    plus = ~ft.minus_elements
    elements[plus] = lookup[elements[plus]]
    nodes = np.vstack([mesh.nodes, mesh.nodes[originals]])
    return Mesh(nodes, elements, mesh.regions.copy(), mesh.facets.copy(), mesh.facet_tags.copy(), mesh.dim)


def split_parent(n_original, ft):
    """Map every node of the split mesh to its original node."""
    parent = np.arange(n_original + len(ft.split_map), dtype=np.int64)
    for v, d in ft.split_map.items():
        parent[d] = v
    return parent


def merge_split(split_mesh, ft, n_original):
    """Undo ``split_fault_nodes``: rebind copies to their originals and drop them."""
    parent = split_parent(n_original, ft)
    return Mesh(
        split_mesh.nodes[:n_original].copy(),
        parent[split_mesh.elements],
        split_mesh.regions.copy(),
        split_mesh.facets.copy(),
        split_mesh.facet_tags.copy(),
        split_mesh.dim,
    )


def weight_function(ft, x):
    """Distance from a fault point ``x`` to the fault boundary ``dS``.

    Raises DomainError if ``x`` is not on a fault facet (tolerance ``1e-12 * diam``).
    """
    x = np.asarray(x, dtype=float)
    seg = ft.s_segments
    if len(seg) == 0:
        raise DomainError("the fault is empty")
    a, b = seg[:, 0], seg[:, 1]
    d = b - a
    t = np.clip(np.einsum("ij,ij->i", x - a, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
    dist = np.hypot(*(a + t[:, None] * d - x).T)
    if dist.min() > 1e-12 * ft.diameter:
        raise DomainError(f"point {x.tolist()} is not on the fault")
    if len(ft.s_boundary_points) == 0:
        raise DomainError("the fault has no boundary")
    return float(np.min(np.hypot(*(ft.s_boundary_points - x).T)))
