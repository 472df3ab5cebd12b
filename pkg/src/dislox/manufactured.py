"""Manufactured solutions with a displacement jump on a unit-square fault.

Each case picks piecewise polynomial exact fields, one piece per side of the
fault strip, and derives every load symbolically: the body force
``f = -div sigma`` per element, the boundary traction ``sigma nu`` on free
facets and an interior datum ``(sigma_A - sigma_B) n_A`` on every interior
edge where the piece or the material changes. The fault datum is what makes
the discrete problem consistent with an exact solution whose traction jumps
across the fault; it is used for convergence testing only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as s

from .dislocation import BoundaryConditions, solve
from .errors import ConfigError
from .fem import TRI_POINTS, TRI_WEIGHTS, SlipField, edge_contributions, error_norms
from .generate import BOTTOM, square_roles, structured_square
from .material import build_elastic_model
from .mesh import build_fault_topology

KINDS = ("smooth_jump", "layered_jump", "zero_jump")
_X, _Y = s.symbols("x y", real=True)


def _bump(t, a, b):
    """Quartic ``16 (t - a)^2 (b - t)^2``, vanishing to second order at both ends."""
    return 16 * (t - a) ** 2 * (b - t) ** 2


@dataclass(frozen=True)
class _Spec:
    fault: tuple
    boxes: tuple
    layers: tuple
    materials: dict
    admissibility: dict
    base: tuple
    jump: tuple
    strip: tuple  # (x0, y0, x1, y1) where the jump piece lives


def _spec(kind):
    # unit-order background deformation, clamped at y = 0
    w = (_Y * (3 + 2 * _X - _Y), _Y * (1 - _X + 2 * _Y))
    smooth_mat = {"lambda": [2.0, 0.0, 0.5], "mu": [1.0, 0.25, 0.0]}
    if kind == "smooth_jump":
        return _Spec(
            fault=((0.25, 0.5), (0.75, 0.5)),
            boxes=((0.25, 0.375, 0.75, 0.5), (0.125, 0.25, 0.875, 0.5)),
            layers=(),
            materials={1: smooth_mat, 11: smooth_mat},
            admissibility={"alpha0": 0.5, "beta0": 1.0, "M": 100.0},
            base=w,
            jump=(_bump(_X, 0.25, 0.75), s.Integer(0)),
            strip=(0.25, 0.5, 0.75, 1.0),
        )
    if kind == "layered_jump":
        soft = {"lambda": [1.5, 0.0, 0.0], "mu": [1.0, 0.0, 0.0]}
        stiff = {"lambda": [14.0, 0.0, 2.0], "mu": [10.0, 0.0, 0.0]}
        return _Spec(
            fault=((0.5, 0.25), (0.5, 0.75)),
            boxes=((0.375, 0.25, 0.5, 0.75), (0.25, 0.125, 0.5, 0.875)),
            layers=(0.5,),
            materials={1: soft, 11: soft, 2: stiff, 12: stiff},
            admissibility={"alpha0": 0.5, "beta0": 1.0, "M": 100.0},
            base=w,
            jump=(s.Integer(0), _bump(_Y, 0.25, 0.75)),
            strip=(0.5, 0.25, 1.0, 0.75),
        )
    if kind == "zero_jump":
        return _Spec(
            fault=((0.25, 0.5), (0.75, 0.5)),
            boxes=((0.25, 0.375, 0.75, 0.5), (0.125, 0.25, 0.875, 0.5)),
            layers=(),
            materials={1: smooth_mat, 11: smooth_mat},
            admissibility={"alpha0": 0.5, "beta0": 1.0, "M": 100.0},
            base=(s.Rational(1, 5) * _Y, -s.Rational(1, 10) * _Y),
            jump=(s.Integer(0), s.Integer(0)),
            strip=(0.25, 0.5, 0.75, 1.0),
        )
    raise ConfigError(f"unknown manufactured case '{kind}' (expected one of {', '.join(KINDS)})")


def _lambdify_vec(exprs):
    fns = [s.lambdify((_X, _Y), e, "numpy") for e in exprs]

    def call(x):
        return np.stack([np.broadcast_to(f(x[..., 0], x[..., 1]), x.shape[:-1]) for f in fns], axis=-1)

    return call


@dataclass(eq=False)
class ManufacturedCase:
    """Everything needed to solve and score one manufactured problem."""

    kind: str
    mesh: object
    roles: object
    ft: object
    model: object
    bc: BoundaryConditions
    slip: SlipField
    spec: _Spec
    _pieces: dict

    def piece_of(self, anchor):
        x0, y0, x1, y1 = self.spec.strip
        a = np.asarray(anchor)
        return ((a[..., 0] > x0) & (a[..., 0] < x1) & (a[..., 1] > y0) & (a[..., 1] < y1)).astype(int)

    def exact(self, x, anchor):
        piece = self.piece_of(anchor)
        return np.where(piece[..., None] == 1, self._pieces["u"][1](x), self._pieces["u"][0](x))

    def grad_exact(self, x, anchor):
        piece = self.piece_of(anchor)
        g0 = self._pieces["grad"][0](x).reshape(x.shape[:-1] + (2, 2))
        g1 = self._pieces["grad"][1](x).reshape(x.shape[:-1] + (2, 2))
        return np.where(piece[..., None, None] == 1, g1, g0)

    def slip_function(self, x):
        return _lambdify_vec(self.spec.jump)(np.asarray(x, dtype=float))


def manufactured_mesh(kind, n, alternative_gamma=False):
    """Structured mesh, roles and fault topology for a case at ``n`` cells per side."""
    spec = _spec(kind)
    mesh = structured_square(n, fault=spec.fault, box=spec.boxes[1 if alternative_gamma else 0], layers=spec.layers)
    roles = square_roles(mesh, sigma=(BOTTOM,))
    return mesh, roles, build_fault_topology(mesh, roles)


def manufactured_case(kind, n=16, alternative_gamma=False, mesh=None, roles=None, ft=None):
    """Build a manufactured case; a mesh from ``manufactured_mesh`` may be supplied."""
    spec = _spec(kind)
    if mesh is None:
        mesh, roles, ft = manufactured_mesh(kind, n, alternative_gamma)
    model = build_elastic_model(spec.materials, spec.admissibility, mesh.region_tags)

    u_pieces = [s.Matrix(spec.base), s.Matrix(spec.base) + s.Matrix(spec.jump)]
    stress, force = {}, {}
    for region in mesh.region_tags:
        lam_f, mu_f = model.lam[region], model.mu[region]
        lam = lam_f.a + lam_f.b[0] * _X + lam_f.b[1] * _Y
        mu = mu_f.a + mu_f.b[0] * _X + mu_f.b[1] * _Y
        for p, u in enumerate(u_pieces):
            grad = u.jacobian([_X, _Y])
            eps = (grad + grad.T) / 2
            sig = lam * eps.trace() * s.eye(2) + 2 * mu * eps
            div = [s.diff(sig[i, 0], _X) + s.diff(sig[i, 1], _Y) for i in range(2)]
            stress[p, region] = _lambdify_vec([sig[0, 0], sig[1, 1], sig[0, 1]])
            force[p, region] = _lambdify_vec([-s.expand(d) for d in div])
    pieces = {
        "u": [_lambdify_vec(list(u)) for u in u_pieces],
        "grad": [_lambdify_vec(list(u.jacobian([_X, _Y]))) for u in u_pieces],
    }
    case = ManufacturedCase(kind, mesh, roles, ft, model, None, None, spec, pieces)
    piece = case.piece_of(mesh.centroids)

    # body force with the degree-4 rule
    p = mesh.nodes[mesh.elements]
    xq = np.einsum("qj,ejd->eqd", TRI_POINTS, p)
    fq = np.zeros(xq.shape)
    for (pc, region), fn in force.items():
        sel = (piece == pc) & (mesh.regions == region)
        if sel.any():
            fq[sel] = fn(xq[sel])
    wq = TRI_WEIGHTS[None, :] * mesh.areas[:, None]
    loads = np.einsum("eq,qi,eqd->eid", wq, TRI_POINTS, fq)

    def sigma_n(elems, x, nrm):
        out = np.zeros(x.shape)
        for (pc, region), fn in stress.items():
            sel = (piece[elems] == pc) & (mesh.regions[elems] == region)
            if sel.any():
                sv = fn(x[sel])
                nn = nrm[sel][:, None, :]
                out[sel] = np.stack(
                    [sv[..., 0] * nn[..., 0] + sv[..., 2] * nn[..., 1],
                     sv[..., 2] * nn[..., 0] + sv[..., 1] * nn[..., 1]], axis=-1)
        return out

    # free boundary tractions
    free = mesh.facets_with_tags(roles.free_tags)
    if len(free):
        owners, oriented, nrm = _oriented(mesh, free)
        loads += edge_contributions(mesh, oriented, owners, lambda x: sigma_n(owners, x, nrm))

    # interior data where the piece or the region changes
    ee = mesh.edge_elements
    interior = np.flatnonzero(ee[:, 1] >= 0)
    a, b = ee[interior, 0], ee[interior, 1]
    differ = (piece[a] != piece[b]) | (mesh.regions[a] != mesh.regions[b])
    idx = interior[differ]
    if len(idx):
        a, b = ee[idx, 0], ee[idx, 1]
        minus = ft.minus_elements
        # the plus element owns data on Gamma
        swap = minus[b] & ~minus[a]
        a, b = np.where(swap, b, a), np.where(swap, a, b)
        owners, oriented, nrm = _oriented_in(mesh, mesh.edges[idx], a)
        owner_b = b
        loads += edge_contributions(
            mesh, oriented, owners, lambda x: sigma_n(owners, x, nrm) - sigma_n(owner_b, x, nrm)
        )

    case.bc = BoundaryConditions(frozenset(roles.sigma_tags), loads)
    case.slip = SlipField.from_function(mesh, ft, case.slip_function)
    return case


def _oriented_in(mesh, edges, owners):
    """Orient ``edges`` counter-clockwise in ``owners``; return outward normals."""
    tris = mesh.elements[owners]
    u, v = edges[:, 0], edges[:, 1]
    iu = np.argmax(tris == u[:, None], axis=1)
    forward = tris[np.arange(len(tris)), (iu + 1) % 3] == v
    oriented = np.where(forward[:, None], edges, edges[:, ::-1])
    d = mesh.nodes[oriented[:, 1]] - mesh.nodes[oriented[:, 0]]
    nrm = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    return owners, oriented, nrm


def _oriented(mesh, facets):
    idx = mesh.edge_index(facets)
    owners = mesh.edge_elements[idx, 0]
    return _oriented_in(mesh, mesh.edges[idx], owners)


def convergence_study(kind, levels=(16, 32, 64), methods=("split", "interface")):
    """Errors and observed orders over uniform refinements.

    Returns a list of row dicts with ``n, h, method, l2, h1, l2_order, h1_order`` plus
    the transmission diagnostics of each solve.
    """
    rows = []
    for method in methods:
        prev = None
        for n in levels:
            case = manufactured_case(kind, n)
            sol = solve(case.mesh, case.model, case.ft, case.slip, case.bc, method=method)
            l2, h1 = error_norms(sol.split_mesh, sol.values, case.exact, case.grad_exact)
            row = {"method": method, "n": n, "h": 1.0 / n, "l2": l2, "h1": h1,
                   "l2_order": float("nan"), "h1_order": float("nan"),
                   "flux_jump_gamma": sol.report.flux_jump_gamma,
                   "traction_jump_gamma": sol.report.traction_jump_gamma,
                   "jump_error": sol.report.jump_error,
                   "iterations": sol.info.get("iterations", 0)}
            if prev is not None:
                ratio = np.log(prev["h"] / row["h"])
                row["l2_order"] = float(np.log(prev["l2"] / l2) / ratio)
                row["h1_order"] = float(np.log(prev["h1"] / h1) / ratio)
            rows.append(row)
            prev = row
    return rows
