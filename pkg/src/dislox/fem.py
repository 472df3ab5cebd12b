"""P1 plane-strain finite elements: assembly, loads, solves, fluxes and norms.

Global dof of node ``i`` and component ``k`` is ``2 i + k``. Loads are kept
as element-owned local contributions of shape (M, 3, 2) so that the same data
can be scattered into any connectivity (merged, split or a subdomain).
"""
from __future__ import annotations

import inspect
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import AssemblyError, ConfigError, DomainError, InvariantError, SolveError
from .material import voigt_stress

# 6-point symmetric rule on the reference triangle, exact for degree 4
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_POINTS = np.array([
    [1 - 2 * _A1, _A1, _A1], [_A1, 1 - 2 * _A1, _A1], [_A1, _A1, 1 - 2 * _A1],
    [1 - 2 * _A2, _A2, _A2], [_A2, 1 - 2 * _A2, _A2], [_A2, _A2, 1 - 2 * _A2],
])
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)

# Gauss-Legendre on [0, 1]
GAUSS2 = (np.array([0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)]), np.array([0.5, 0.5]))
GAUSS3 = (
    np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)]),
    np.array([5.0, 8.0, 5.0]) / 18.0,
)


# -- dofs and systems --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DofMap:
    """Numbering of unconstrained ``(node, component)`` pairs.

    Attributes:
        n_nodes: node count of the mesh the map refers to.
        constrained: sorted node ids clamped in both components.
        free: (n_free,) global dof ids kept, increasing.
        index: (2 N,) free index of each global dof, -1 if constrained.
    """

    n_nodes: int
    constrained: np.ndarray
    free: np.ndarray
    index: np.ndarray

    @classmethod
    def build(cls, n_nodes, constrained_nodes=()):
        constrained = np.unique(np.asarray(constrained_nodes, dtype=np.int64))
        mask = np.ones(2 * n_nodes, bool)
        mask[2 * constrained] = False
        mask[2 * constrained + 1] = False
        free = np.flatnonzero(mask)
        index = -np.ones(2 * n_nodes, dtype=np.int64)
        index[free] = np.arange(len(free))
        return cls(n_nodes, constrained, free, index)

    @property
    def n_free(self):
        return len(self.free)

    def restrict(self, vec):
        return np.asarray(vec)[self.free]

    def expand(self, x, fill=None):
        """Full dof vector from free values; constrained dofs take ``fill`` (zeros by default)."""
        out = np.zeros(2 * self.n_nodes) if fill is None else np.array(fill, dtype=float)
        out[self.free] = x
        return out


@dataclass(eq=False)
class LinearSystem:
    """``K x = b``, optionally bordered by constraint columns ``C`` with ``C^T x = d``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraints: np.ndarray = None
    constraint_rhs: np.ndarray = None

    def bordered(self):
        C = sp.csr_matrix(self.constraints)
        k = C.shape[1]
        return sp.bmat([[self.matrix, C], [C.T, None]], format="csc"), np.concatenate(
            [self.rhs, np.zeros(k) if self.constraint_rhs is None else self.constraint_rhs]
        )


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Nodal displacements ``values`` (N, 2) on ``mesh`` (possibly split)."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise InvariantError("displacement field has non-finite entries")


# -- assembly ----------------------------------------------------------------


def _element_mask(mesh, elements):
    if elements is None:
        return np.ones(mesh.n_elements, bool)
    elements = np.asarray(elements)
    if elements.dtype == bool:
        return elements
    mask = np.zeros(mesh.n_elements, bool)
    mask[elements] = True
    return mask


def _element_dofs(tris):
    return np.stack([2 * tris, 2 * tris + 1], axis=-1).reshape(len(tris), 6)


def reduce_matrix(K, dofmap):
    return K[dofmap.free][:, dofmap.free].tocsr()


def assemble_stiffness(mesh, model, elements=None, dofmap=None):
    """Global stiffness over an element subset.

    Coefficients are taken at element centroids: for affine Lame fields the
    one-point rule integrates constant strain times coefficient exactly.
    Returns the full (2N, 2N) CSR matrix, or the reduced free block when a
    ``dofmap`` is given.
    """
    mask = _element_mask(mesh, elements)
    tris = mesh.elements[mask]
    n = mesh.n_nodes
    lam, mu = model.coefficients(mesh.regions[mask], mesh.centroids[mask])
    areas = mesh.areas[mask]
    if np.any(areas <= 0):
        raise AssemblyError(f"degenerate element {int(np.flatnonzero(mask)[np.argmax(areas <= 0)])}")
    Ke = kernels.element_stiffness(mesh.nodes, tris, lam, mu)
    dofs = _element_dofs(tris)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(2 * n, 2 * n)).tocsr()
    K.sum_duplicates()
    return K if dofmap is None else reduce_matrix(K, dofmap)


# -- loads -------------------------------------------------------------------


def _arity(fn):
    try:
        params = inspect.signature(fn).parameters.values()
    except (TypeError, ValueError):
        return 1
    if any(p.kind == p.VAR_POSITIONAL for p in params):
        return 2
    return sum(p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD) and p.default is p.empty for p in params)


def _eval_vector(fn, x, anchor):
    """Evaluate a load description at points ``x`` (..., 2)."""
    if fn is None:
        return np.zeros(x.shape)
    if callable(fn):
        out = fn(x, anchor) if _arity(fn) >= 2 else fn(x)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape)
    return np.broadcast_to(np.asarray(fn, dtype=float), x.shape)


def body_force_contributions(mesh, f, elements=None):
    """Element contributions ``int f . phi_i`` (M, 3, 2) with a degree-4 rule.

    ``f`` is a constant vector, a callable ``f(x)`` or ``f(x, anchor)`` where
    ``anchor`` is the owning element centroid, or a dict ``{region: f}``.
    """
    mask = _element_mask(mesh, elements)
    out = np.zeros((mesh.n_elements, 3, 2))
    if f is None:
        return out
    p = mesh.nodes[mesh.elements]
    x = np.einsum("qj,ejd->eqd", TRI_POINTS, p)
    anchor = np.broadcast_to(mesh.centroids[:, None, :], x.shape)
    if isinstance(f, dict):
        vals = np.zeros(x.shape)
        for region, fr in f.items():
            sel = mesh.regions == int(region)
            vals[sel] = _eval_vector(fr, x[sel], anchor[sel])
    else:
        vals = _eval_vector(f, x, anchor)
    w = TRI_WEIGHTS[None, :] * mesh.areas[:, None]
    out = np.einsum("eq,qi,eqd->eid", w, TRI_POINTS, vals)
    out[~mask] = 0.0
    return out


def edge_contributions(mesh, facets, owners, h, rule=GAUSS3):
    """Contributions ``int_e h . phi_i`` of facet data, credited to ``owners``.

    Each facet ``(a, b)`` must be an edge of its owner element. ``h`` follows the
    conventions of ``body_force_contributions`` with the owner centroid as anchor.
    """
    out = np.zeros((mesh.n_elements, 3, 2))
    facets = np.asarray(facets, dtype=np.int64).reshape(-1, 2)
    owners = np.asarray(owners, dtype=np.int64)
    if len(facets) == 0 or h is None:
        return out
    tris = mesh.elements[owners]
    la = np.argmax(tris == facets[:, :1], axis=1)
    lb = np.argmax(tris == facets[:, 1:], axis=1)
    if not (np.all(tris[np.arange(len(tris)), la] == facets[:, 0])
            and np.all(tris[np.arange(len(tris)), lb] == facets[:, 1])):
        raise DomainError("facet is not an edge of its owner element")
    s, w = rule
    pa, pb = mesh.nodes[facets[:, 0]], mesh.nodes[facets[:, 1]]
    length = np.hypot(*(pb - pa).T)
    x = pa[:, None, :] * (1 - s)[None, :, None] + pb[:, None, :] * s[None, :, None]
    anchor = np.broadcast_to(mesh.centroids[owners][:, None, :], x.shape)
    vals = _eval_vector(h, x, anchor)
    wl = w[None, :] * length[:, None]
    ia = np.einsum("fq,q,fqd->fd", wl, 1 - s, vals)
    ib = np.einsum("fq,q,fqd->fd", wl, s, vals)
    np.add.at(out, (owners, la), ia)
    np.add.at(out, (owners, lb), ib)
    return out


def boundary_owners(mesh, facets):
    """Adjacent element of each boundary facet."""
    idx = mesh.edge_index(facets)
    if np.any(idx < 0):
        raise DomainError("facet is not a mesh edge")
    ee = mesh.edge_elements[idx]
    if np.any(ee[:, 1] >= 0):
        raise DomainError("facet is not on the boundary")
    return ee[:, 0]


def traction_contributions(mesh, tractions):
    """Contributions of boundary tractions ``{facet_tag: h}``."""
    out = np.zeros((mesh.n_elements, 3, 2))
    known = set(mesh.facet_tags.tolist())
    for tag, h in (tractions or {}).items():
        if int(tag) not in known:
            raise ConfigError(f"unknown facet tag {tag} in traction data")
        facets = mesh.facets_with_tags([int(tag)])
        out += edge_contributions(mesh, facets, boundary_owners(mesh, facets), h)
    return out


def scatter(contrib, connectivity, n_nodes, elements=None):
    """Sum element contributions into a (2 n_nodes,) vector in a fixed order."""
    mask = np.ones(len(connectivity), bool) if elements is None else elements
    idx = connectivity[mask].ravel()
    vals = contrib[mask].reshape(-1, 2)
    out = np.empty((n_nodes, 2))
    out[:, 0] = np.bincount(idx, weights=vals[:, 0], minlength=n_nodes)
    out[:, 1] = np.bincount(idx, weights=vals[:, 1], minlength=n_nodes)
    return out.ravel()


def assemble_load(mesh, body=None, tractions=None, dofmap=None, elements=None):
    """Load vector ``int f . phi_i + int h . phi_i``.

    Args:
        body: body force, see ``body_force_contributions``.
        tractions: ``{facet_tag: h}`` boundary traction data.
        dofmap: if given, the free part is returned.
    """
    contrib = body_force_contributions(mesh, body, elements) + traction_contributions(mesh, tractions)
    mask = None if elements is None else _element_mask(mesh, elements)
    vec = scatter(contrib, mesh.elements, mesh.n_nodes, mask)
    return vec if dofmap is None else dofmap.restrict(vec)


# -- solvers -----------------------------------------------------------------


class Factorization:
    """Sparse LU of a (symmetric) matrix, reused across solves."""

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] == 0:
            self._lu = None
            return
        try:
            self._lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolveError(f"factorization failed: {exc}") from None

    def solve(self, b):
        if self._lu is None:
            return np.zeros_like(b)
        x = self._lu.solve(np.asarray(b, dtype=float))
        if not np.all(np.isfinite(x)):
            raise SolveError("factorization produced non-finite values (singular matrix)")
        return x


def pcg(A, b, tol=1e-10, maxiter=None, precond=None, x0=None):
    """Preconditioned conjugate gradients on the relative residual ``|r| / |b|``.

    ``A`` and ``precond`` may be matrices or callables. Returns ``(x, iterations)``.
    """
    matvec = A if callable(A) else A.dot
    apply_m = precond if callable(precond) else (lambda r: r) if precond is None else precond.dot
    n = len(b)
    maxiter = 10 * max(n, 1) if maxiter is None else maxiter
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), 0
    r = b - matvec(x)
    z = apply_m(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it - 1
        Ap = matvec(p)
        pAp = p @ Ap
        if not pAp > 0:
            raise SolveError(f"indefinite matrix detected by CG (p.Ap = {pAp:.3e})")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = apply_m(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= tol * bnorm:
        return x, maxiter
    raise SolveError(f"CG did not reach relative residual {tol:g} in {maxiter} iterations")


def solve_spd(system, rhs=None, tol=1e-10, maxiter_factor=10, method="cg"):
    """Solve a reduced SPD system or a bordered rigid-motion system.

    ``method`` is ``"cg"`` (Jacobi-preconditioned) or ``"direct"``; bordered
    systems are always solved directly. The relative residual is checked on exit.
    """
    if not isinstance(system, LinearSystem):
        system = LinearSystem(sp.csr_matrix(system), np.asarray(rhs, dtype=float))
    K, b = system.matrix, system.rhs
    if system.constraints is not None:
        A, full = system.bordered()
        x = Factorization(A).solve(full)
        _check_residual(A, x, full, max(tol, 1e-12) * 1e2)
        return x
    if np.linalg.norm(b) == 0.0:
        return np.zeros(len(b))
    if method == "direct":
        x = Factorization(K).solve(b)
    elif method == "cg":
        d = K.diagonal()
        if np.any(d <= 0):
            raise SolveError("non-positive diagonal entry: matrix is not SPD")
        x, _ = pcg(K, b, tol=tol, maxiter=maxiter_factor * len(b), precond=lambda r: r / d)
    else:
        raise ConfigError(f"unknown solve method '{method}'")
    _check_residual(K, x, b, max(tol, 1e-12) * 10)
    return x


def _check_residual(A, x, b, tol):
    bn = np.linalg.norm(b)
    if bn > 0 and np.linalg.norm(A @ x - b) > tol * bn:
        raise SolveError(f"relative residual {np.linalg.norm(A @ x - b) / bn:.3e} exceeds {tol:.1e}")


# -- fluxes, mass and rigid motions ------------------------------------------


def recover_traction(u, mesh, model, facets, elements=None, loads=None):
    """Consistent boundary flux ``t_i = a(u, phi_i) - l(phi_i)`` on the nodes of ``facets``.

    ``facets`` must lie on the boundary of the element subset: every facet is
    an edge with exactly one adjacent element in the subset. ``loads`` are
    element contributions (M, 3, 2); only the subset's rows are used.
    Returns ``(nodes, t)`` with ``t`` of shape (len(nodes), 2).
    """
    mask = _element_mask(mesh, elements)
    facets = np.asarray(facets, dtype=np.int64).reshape(-1, 2)
    idx = mesh.edge_index(facets)
    if np.any(idx < 0):
        raise DomainError("facet is not a mesh edge")
    ee = mesh.edge_elements[idx]
    inside = np.where(ee >= 0, mask[np.maximum(ee, 0)], False).sum(axis=1)
    if np.any(inside != 1):
        raise DomainError("facet set is not on the boundary of the element subset")
    nodes = np.unique(facets)
    return nodes, residual_vector(u, mesh, model, mask, loads)[nodes]


def residual_vector(u, mesh, model, elements=None, loads=None):
    """Nodal residual ``K u - l`` (N, 2) over an element subset."""
    mask = _element_mask(mesh, elements)
    K = assemble_stiffness(mesh, model, mask)
    r = K @ np.asarray(u, dtype=float).ravel()
    if loads is not None:
        r = r - scatter(loads, mesh.elements, mesh.n_nodes, mask)
    return r.reshape(-1, 2)


def lumped_mass(mesh, elements=None):
    """Row-summed P1 mass per node: a third of each adjacent element area."""
    mask = _element_mask(mesh, elements)
    return np.bincount(
        mesh.elements[mask].ravel(), weights=np.repeat(mesh.areas[mask] / 3.0, 3), minlength=mesh.n_nodes
    )


def rigid_motion_basis(mesh, elements=None):
    """Three rigid motions, orthonormal in the lumped-mass inner product over the subset.

    Returns ``(R, m)``: ``R`` is (2N, 3) with zeros off the subset, ``m`` the lumped mass.
    """
    m = lumped_mass(mesh, elements)
    support = m > 0
    if not support.any():
        raise DomainError("empty element subset")
    x = mesh.nodes
    xc = (m[:, None] * x).sum(axis=0) / m.sum()
    raw = np.zeros((mesh.n_nodes, 2, 3))
    raw[:, 0, 0] = 1.0
    raw[:, 1, 1] = 1.0
    raw[:, 0, 2] = -(x[:, 1] - xc[1])
    raw[:, 1, 2] = x[:, 0] - xc[0]
    raw[~support] = 0.0
    R = raw.reshape(-1, 3)
    w = np.repeat(m, 2)
    for k in range(3):
        for j in range(k):
            R[:, k] -= (w * R[:, j] * R[:, k]).sum() * R[:, j]
        R[:, k] /= np.sqrt((w * R[:, k] ** 2).sum())
    return R, m


def mass_matrix_1d(nodes, segments, n=None):
    """Consistent P1 mass matrix of a polyline ``segments`` (pairs of node ids), scalar."""
    segments = np.asarray(segments, dtype=np.int64).reshape(-1, 2)
    n = len(nodes) if n is None else n
    length = np.hypot(*(nodes[segments[:, 1]] - nodes[segments[:, 0]]).T)
    loc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    rows = np.repeat(segments, 2, axis=1).ravel()
    cols = np.tile(segments, (1, 2)).ravel()
    vals = (length[:, None, None] * loc[None]).ravel()
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


# -- slip fields -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SlipField:
    """Nodal slip ``values`` (k, 2) on the fault nodes ``nodes`` (ids of the unsplit mesh)."""

    nodes: np.ndarray
    values: np.ndarray
    _lookup: dict = field(default=None, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64)
        values = np.asarray(self.values, dtype=float).reshape(len(nodes), 2)
        if not np.all(np.isfinite(values)):
            raise InvariantError("slip has non-finite values")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_lookup", {int(v): k for k, v in enumerate(nodes)})

    @classmethod
    def zero(cls, ft):
        return cls(ft.s_nodes, np.zeros((len(ft.s_nodes), 2)))

    @classmethod
    def from_function(cls, mesh, ft, fn):
        """Sample ``fn(x) -> (k, 2)`` at interior fault nodes; zero on the fault boundary."""
        vals = np.zeros((len(ft.s_nodes), 2))
        interior = ~np.isin(ft.s_nodes, ft.s_boundary_nodes)
        if interior.any():
            vals[interior] = np.asarray(fn(mesh.nodes[ft.s_nodes[interior]]), dtype=float).reshape(-1, 2)
        return cls(ft.s_nodes, vals)

    def at(self, node_ids):
        """Values at the given nodes (zero for nodes not on the fault)."""
        out = np.zeros((len(node_ids), 2))
        for i, v in enumerate(np.asarray(node_ids).tolist()):
            k = self._lookup.get(int(v))
            if k is not None:
                out[i] = self.values[k]
        return out

    def check(self, ft, atol=0.0):
        bad = np.abs(self.at(ft.s_boundary_nodes)).max(initial=0.0)
        if bad > atol:
            raise InvariantError(f"slip is nonzero ({bad:.3e}) on a fault boundary node")


def weighted_slip_norm(slip, mesh, ft):
    """``(int |g|^2)^(1/2) + (int |g|^2 / rho)^(1/2)`` over the fault, 2-point Gauss per facet."""
    slip.check(ft)
    s, w = GAUSS2
    a, b = ft.s_facets[:, 0], ft.s_facets[:, 1]
    pa, pb = mesh.nodes[a], mesh.nodes[b]
    ga, gb = slip.at(a), slip.at(b)
    length = np.hypot(*(pb - pa).T)
    x = pa[:, None, :] * (1 - s)[None, :, None] + pb[:, None, :] * s[None, :, None]
    g = ga[:, None, :] * (1 - s)[None, :, None] + gb[:, None, :] * s[None, :, None]
    g2 = (g ** 2).sum(axis=-1)
    diff = x[:, :, None, :] - ft.s_boundary_points[None, None, :, :]
    rho = np.sqrt((diff ** 2).sum(axis=-1)).min(axis=-1)
    wl = w[None, :] * length[:, None]
    return float(np.sqrt((wl * g2).sum()) + np.sqrt((wl * g2 / rho).sum()))


# -- stresses and error norms ------------------------------------------------


def element_stress(mesh, model, u):
    """Constant Voigt stress per element (M, 3) at the element centroid coefficients."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    if len(u) != mesh.n_nodes:
        raise DomainError("field and mesh node counts differ")
    strain = kernels.element_strain(mesh.nodes, mesh.elements, u)
    lam, mu = model.element_coefficients(mesh)
    return voigt_stress(lam, mu, strain)


def field_l2(mesh, u):
    """Exact L2 norm of a P1 vector field (N, 2) on ``mesh``."""
    ue = np.asarray(u, dtype=float).reshape(-1, 2)[mesh.elements]
    quad = (ue ** 2).sum(axis=(1, 2)) + (ue.sum(axis=1) ** 2).sum(axis=1)
    return float(np.sqrt((mesh.areas / 12.0 * quad).sum()))


def error_norms(mesh, u, exact, grad_exact=None, elements=None):
    """L2 error and H1-seminorm error of a P1 field against exact callables.

    ``exact(x, anchor)`` and ``grad_exact(x, anchor)`` receive points (..., 2) and the
    owning element centroid, and return (..., 2) and (..., 2, 2) (``d u_i / d x_j``).
    Returns ``(l2, h1_semi)``; the seminorm is None without ``grad_exact``.
    """
    mask = _element_mask(mesh, elements)
    conn = mesh.elements[mask]
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    p = mesh.nodes[mesh.elements[mask]]
    x = np.einsum("qj,ejd->eqd", TRI_POINTS, p)
    anchor = np.broadcast_to(mesh.centroids[mask][:, None, :], x.shape)
    uh = np.einsum("qj,ejd->eqd", TRI_POINTS, u[conn])
    w = TRI_WEIGHTS[None, :] * mesh.areas[mask][:, None]
    l2 = float(np.sqrt((w * ((uh - exact(x, anchor)) ** 2).sum(axis=-1)).sum()))
    if grad_exact is None:
        return l2, None
    b, c, area = kernels.element_geometry(mesh.nodes, conn)
    gx = b / (2 * area[:, None])
    gy = c / (2 * area[:, None])
    ue = u[conn]
    grad = np.stack([
        np.stack([(gx * ue[..., 0]).sum(1), (gy * ue[..., 0]).sum(1)], axis=-1),
        np.stack([(gx * ue[..., 1]).sum(1), (gy * ue[..., 1]).sum(1)], axis=-1),
    ], axis=1)
    diff = grad[:, None] - grad_exact(x, anchor)
    h1 = float(np.sqrt((w * (diff ** 2).sum(axis=(-1, -2))).sum()))
    return l2, h1
