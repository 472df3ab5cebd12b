"""Fault geometry and slip reconstruction from displacement data on a surface patch.

The body is the unit square, clamped on its bottom and sides, with the top
edge traction free. Data are sampled on the patch ``Xi`` of the top edge.
A fault is the graph ``x2' = psi(x1')`` of a piecewise linear function in a
frame rotated about the centre of the square. The Omega_minus region is a
thin strip below the graph.

Meshes are generated once per reference configuration and morphed smoothly
onto each candidate graph, so every candidate shares one topology and finite
differences in the heights are free of remeshing noise.
"""
from __future__ import annotations

import csv
import io
import math
import os
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import triangle

from .dislocation import BoundaryConditions, _fold, _lift
from .errors import DimensionError, DisloxError, GeometryError, NonConvergence
from .fem import DofMap, Factorization, SlipField, assemble_stiffness
from .generate import BOTTOM, FAULT, LEFT, RIGHT, TOP, XI
from .material import build_elastic_model
from .mesh import BoundaryRoles, Mesh, build_fault_topology, split_fault_nodes, split_parent

STRIP = 20
MINUS_REGION, PLUS_REGION = 11, 1
ORIGIN = np.array([0.5, 0.5])
_TRIANGLE_LOCK = threading.Lock()


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class FaultParam:
    """Graph fault ``x2' = psi(x1')`` over ``knots`` in a frame rotated by ``angle``.

    Frame coordinates are ``x' = R(angle)^T (x - origin)`` with the origin at
    the centre of the unit square.
    """

    angle: float
    knots: tuple
    heights: tuple

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        heights = tuple(float(h) for h in self.heights)
        if len(knots) != len(heights) or len(knots) < 2:
            raise DimensionError("knots and heights need equal length >= 2")
        if np.any(np.diff(knots) <= 0):
            raise GeometryError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "heights", heights)

    def with_heights(self, heights):
        return replace(self, heights=tuple(float(h) for h in heights))

    def psi(self, t):
        return np.interp(t, self.knots, self.heights)

    def points(self):
        """Fault vertices in world coordinates, one per knot."""
        local = np.column_stack([self.knots, self.heights])
        return ORIGIN + local @ _rotation(self.angle).T

    def to_frame(self, x):
        return (np.asarray(x) - ORIGIN) @ _rotation(self.angle)

    def from_frame(self, p):
        return ORIGIN + np.asarray(p) @ _rotation(self.angle).T

    @property
    def length(self):
        return float(np.hypot(*np.diff(self.points(), axis=0).T).sum())


@dataclass(frozen=True)
class SlipParam:
    """Coefficients of ``sin(k pi s)`` modes along the frame tangent, then the frame normal."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) % 2:
            raise DimensionError("slip needs an even number of coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def p(self):
        return len(self.coeffs)

    @property
    def array(self):
        return np.array(self.coeffs)


@dataclass(frozen=True)
class MeshingOptions:
    """Reference meshing: target size ``h``, strip thickness, morph taper and safety box.

    ``base`` is the frame height of the straight reference fault; None uses
    the mean of the heights being realized.
    """

    h: float = 0.05
    thickness: float = 0.05
    taper: float = 0.15
    safety_box: tuple = (0.1, 0.1, 0.9, 0.9)
    min_angle: float = 15.0
    xi: tuple = (0.375, 0.625)
    base: float = None


@dataclass(frozen=True)
class SurfaceData:
    """Displacements ``values`` (k, 2) at ``points`` (k, 2) on the patch."""

    points: np.ndarray
    values: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != pts.shape:
            raise DimensionError(f"{len(pts)} sample points but values of shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DimensionError("non-finite data values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def vector(self):
        return self.values.ravel()

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "ux", "uy"])
        for (x, y), (ux, uy) in zip(self.points.tolist(), self.values.tolist()):
            w.writerow([repr(x), repr(y), repr(ux), repr(uy)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["x", "y", "ux", "uy"]:
            raise DimensionError("data CSV needs the header x,y,ux,uy")
        arr = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, 4)
        return cls(arr[:, :2], arr[:, 2:])


@dataclass(frozen=True, eq=False)
class InverseSetup:
    """Model, boundary roles, meshing options, slip mode count and the fixed sample set."""

    model: object
    opts: MeshingOptions
    p: int
    points: np.ndarray
    roles: BoundaryRoles = None
    threads: int = None

    def __post_init__(self):
        if self.roles is None:
            object.__setattr__(self, "roles", default_roles())


def default_roles():
    return BoundaryRoles(
        sigma_tags={BOTTOM, LEFT, RIGHT},
        free_tags={TOP, XI},
        xi_tags={XI},
        fault_tags={FAULT},
        omega_minus_regions={MINUS_REGION},
    )


# -- geometry ----------------------------------------------------------------


def _check_inside(points, box, what):
    x0, y0, x1, y1 = box
    p = np.asarray(points)
    if np.any(p[:, 0] < x0) or np.any(p[:, 0] > x1) or np.any(p[:, 1] < y0) or np.any(p[:, 1] > y1):
        raise GeometryError(f"{what} leaves the safety box {tuple(box)}")


@lru_cache(maxsize=32)
def _reference_mesh(angle, knots, base, opts):
    """Triangulate the square with a straight fault at frame height ``base``."""
    frame = FaultParam(angle, knots, (base,) * len(knots))
    top = frame.points()
    bottom = frame.from_frame(np.column_stack([knots, [base - opts.thickness] * len(knots)]))[::-1]
    _check_inside(np.vstack([top, bottom]), opts.safety_box, "fault strip")
    xa, xb = opts.xi
    outer = np.array([[0, 0], [1, 0], [1, 1], [xb, 1], [xa, 1], [0, 1]], dtype=float)
    outer_seg = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0]]
    outer_tag = [BOTTOM, RIGHT, TOP, XI, TOP, LEFT]
    m = len(knots)
    k0 = len(outer)
    vertices = np.vstack([outer, top, bottom])
    fault_seg = [[k0 + i, k0 + i + 1] for i in range(m - 1)]
    ring = [k0 + m - 1] + list(range(k0 + m, k0 + 2 * m)) + [k0]
    strip_seg = [[ring[i], ring[i + 1]] for i in range(len(ring) - 1)]
    segments = np.array(outer_seg + fault_seg + strip_seg)
    markers = np.array(outer_tag + [FAULT] * len(fault_seg) + [STRIP] * len(strip_seg))
    inside = frame.from_frame(np.array([[0.5 * (knots[0] + knots[1]), base - 0.5 * opts.thickness]]))[0]
    area = opts.h ** 2 * math.sqrt(3) / 4
    data = dict(
        vertices=vertices, segments=segments, segment_markers=markers,
        regions=np.array([[inside[0], inside[1], MINUS_REGION, 0.0], [1e-3, 1e-3, PLUS_REGION, 0.0]]),
    )
    with _TRIANGLE_LOCK:
        out = triangle.triangulate(data, f"pq30a{area:.12g}AQ")
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    p = nodes[tris]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    tris[signed < 0] = tris[signed < 0][:, [0, 2, 1]]
    regions = np.rint(np.asarray(out["triangle_attributes"]).ravel()).astype(np.int64)
    seg = np.asarray(out["segments"], dtype=np.int64)
    tags = np.asarray(out["segment_markers"]).ravel().astype(np.int64)
    keep = tags != STRIP
    return nodes, tris, regions, seg[keep], tags[keep]


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _min_angle_deg(nodes, tris):
    p = nodes[tris]
    worst = np.full(len(tris), np.pi)
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cosv = np.einsum("ij,ij->i", a, b) / (np.hypot(*a.T) * np.hypot(*b.T))
        worst = np.minimum(worst, np.arccos(np.clip(cosv, -1.0, 1.0)))
    return float(np.degrees(worst.min()))


def realize_fault(fp, opts=None, roles=None):
    """Conforming mesh and fault topology for ``fp``.

    The reference mesh (straight fault at height ``opts.base``) is morphed by
    ``(psi(x1') - base) * beta(x') e2'`` where ``beta`` is one on the fault
    strip and decays smoothly to zero within the taper width.
    """
    opts = opts or MeshingOptions()
    roles = roles or default_roles()
    _check_inside(fp.points(), opts.safety_box, "fault")
    base = float(np.mean(fp.heights)) if opts.base is None else float(opts.base)
    nodes, tris, regions, facets, tags = _reference_mesh(fp.angle, fp.knots, base, replace(opts, base=None))
    local = fp.to_frame(nodes)
    k0, k1 = fp.knots[0], fp.knots[-1]
    lo, hi = base - opts.thickness, base
    dx = np.maximum(np.maximum(k0 - local[:, 0], local[:, 0] - k1), 0.0)
    dy = np.maximum(np.maximum(lo - local[:, 1], local[:, 1] - hi), 0.0)
    dist = np.hypot(dx, dy)
    core = fp.from_frame(np.array([[k0, lo], [k1, lo], [k1, hi], [k0, hi]]))
    room = min(core.min(), 1.0 - core.max())
    taper = min(opts.taper, 0.9 * room)
    beta = _smoothstep(1.0 - dist / taper)
    local[:, 1] += (fp.psi(np.clip(local[:, 0], k0, k1)) - base) * beta
    moved = fp.from_frame(local)
    if np.any(beta[np.unique(facets[np.isin(tags, [BOTTOM, RIGHT, TOP, LEFT, XI])])] > 0):
        raise GeometryError("fault morph reaches the outer boundary")
    p = moved[tris]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    if np.any(signed <= 0):
        raise GeometryError("fault morph inverts elements")
    worst = _min_angle_deg(moved, tris)
    if worst < opts.min_angle:
        raise GeometryError(f"mesh quality below floor: min angle {worst:.2f} < {opts.min_angle} degrees")
    mesh = Mesh(moved, tris, regions, facets, tags)
    return mesh, build_fault_topology(mesh, roles)


# -- slip and sampling -------------------------------------------------------


def arclength_fraction(fp, mesh, nodes):
    """Arclength fraction along the fault of fault nodes (graph order by frame abscissa)."""
    x1 = fp.to_frame(mesh.nodes[nodes])[:, 0]
    order = np.argsort(x1, kind="stable")
    pts = mesh.nodes[nodes][order]
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    s = np.empty(len(nodes))
    s[order] = cum / cum[-1]
    return s


def slip_basis(fp, mesh, ft, p):
    """Slip values of every mode at the fault nodes, shape (p, len(s_nodes), 2)."""
    s = arclength_fraction(fp, mesh, ft.s_nodes)
    R = _rotation(fp.angle)
    tangent, normal = R[:, 0], R[:, 1]
    half = p // 2
    basis = np.zeros((p, len(s), 2))
    for k in range(half):
        prof = np.sin((k + 1) * np.pi * s)
        prof[np.isin(ft.s_nodes, ft.s_boundary_nodes)] = 0.0
        basis[k] = prof[:, None] * tangent
        basis[half + k] = prof[:, None] * normal
    return basis


def slip_field(fp, sp, mesh, ft):
    basis = slip_basis(fp, mesh, ft, sp.p)
    return SlipField(ft.s_nodes, np.tensordot(sp.array, basis, axes=1))


def xi_sampling(mesh, xi_tags=(XI,)):
    """Patch nodes and facet midpoints, ordered by abscissa."""
    facets = mesh.facets_with_tags(xi_tags)
    pts = np.vstack([mesh.nodes[np.unique(facets)], mesh.nodes[facets].mean(axis=1)])
    return pts[np.argsort(pts[:, 0], kind="stable")]


def sample_boundary(mesh, values, points, tags=(XI,)):
    """P1 interpolation of nodal ``values`` at points lying on the tagged facets."""
    facets = mesh.facets_with_tags(tags)
    a, b = mesh.nodes[facets[:, 0]], mesh.nodes[facets[:, 1]]
    d = b - a
    out = np.empty((len(points), 2))
    tol = 1e-9 * mesh.diameter
    for i, x in enumerate(np.asarray(points)):
        t = np.clip(((x - a) * d).sum(axis=1) / (d * d).sum(axis=1), 0.0, 1.0)
        dist = np.hypot(*(a + t[:, None] * d - x).T)
        k = int(np.argmin(dist))
        if dist[k] > tol:
            raise DimensionError(f"sample point {x.tolist()} is not on the measurement patch")
        out[i] = (1 - t[k]) * values[facets[k, 0]] + t[k] * values[facets[k, 1]]
    return out


# -- forward map -------------------------------------------------------------


def forward_operator(fp, setup):
    """Matrix (2 k, p) mapping slip coefficients to the patch data of ``fp``.

    One factorization of the clamped stiffness serves all ``p`` modes.
    """
    mesh, ft = realize_fault(fp, setup.opts, setup.roles)
    n = mesh.n_nodes
    split = split_fault_nodes(mesh, ft)
    parent = split_parent(n, ft)
    bc = BoundaryConditions(frozenset(setup.roles.sigma_tags))
    dm = DofMap.build(n, bc.sigma_nodes(mesh))
    lu = Factorization(assemble_stiffness(mesh, setup.model, dofmap=dm))
    K_split = assemble_stiffness(split, setup.model)
    basis = slip_basis(fp, mesh, ft, setup.p)
    cols = []
    for k in range(setup.p):
        G = _lift(SlipField(ft.s_nodes, basis[k]), ft, n)
        x = lu.solve(-dm.restrict(_fold(K_split @ G.ravel(), parent, n)))
        values = dm.expand(x).reshape(-1, 2)[parent] + G
        cols.append(sample_boundary(split, values, setup.points, tuple(setup.roles.xi_tags)).ravel())
    return np.column_stack(cols)


def forward_map(fp, sp, setup):
    """Patch displacements of fault ``fp`` with slip ``sp``."""
    if sp.p != setup.p:
        raise DimensionError(f"slip has {sp.p} coefficients, setup expects {setup.p}")
    F = forward_operator(fp, setup) @ sp.array
    return SurfaceData(setup.points, F.reshape(-1, 2))


def second_difference(m):
    D = np.zeros((max(m - 2, 0), m))
    for i in range(m - 2):
        D[i, i:i + 3] = (1.0, -2.0, 1.0)
    return D


def misfit_value(F, d, c, theta, alpha):
    F, d = np.ravel(F), np.ravel(d)
    if F.shape != d.shape:
        raise DimensionError(f"data of length {d.size} do not match predictions of length {F.size}")
    D2 = second_difference(len(theta)) @ np.asarray(theta)
    return 0.5 * float(((F - d) ** 2).sum()) + alpha * float((np.asarray(c) ** 2).sum() + (D2 ** 2).sum())


def misfit(fp, sp, data, alpha, setup):
    """``0.5 |F - d|^2 + alpha (|c|^2 + |D2 theta|^2)``."""
    if len(data.points) != len(setup.points) or not np.allclose(data.points, setup.points, rtol=0, atol=1e-12):
        raise DimensionError("data were sampled on a different point set")
    F = forward_map(fp, sp, setup).vector
    return misfit_value(F, data.vector, sp.array, fp.heights, alpha)


# -- finite differences ------------------------------------------------------


def _workers(threads=None):
    if threads is None:
        env = os.environ.get("DISLOX_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _default_steps(params, step):
    params = np.asarray(params, dtype=float)
    if step is None:
        return 1e-6 * np.maximum(1.0, np.abs(params))
    return np.broadcast_to(np.asarray(step, dtype=float), params.shape).copy()


def _evaluate(fn, points, threads):
    def call(i):
        try:
            return fn(points[i])
        except DisloxError as exc:
            raise type(exc)(f"evaluation at perturbed parameter {i // 2}: {exc}") from exc

    n = len(points)
    if _workers(threads) == 1 or n == 1:
        return [call(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=_workers(threads)) as pool:
        return list(pool.map(call, range(n)))


def fd_gradient(objective, params, step=None, threads=None):
    """Central-difference gradient. Returns ``(grad, f_plus, f_minus)``."""
    params = np.asarray(params, dtype=float)
    steps = _default_steps(params, step)
    if np.any(steps <= 0):
        raise ValueError("finite-difference step must be positive")
    points = []
    for i in range(len(params)):
        for sign in (1.0, -1.0):
            q = params.copy()
            q[i] += sign * steps[i]
            points.append(q)
    vals = np.array(_evaluate(objective, points, threads), dtype=float)
    fp, fm = vals[0::2], vals[1::2]
    return (fp - fm) / (2 * steps), fp, fm


def fd_jacobian(fn, params, step=None, threads=None):
    """Central-difference Jacobian (len(fn), len(params)) of a vector function."""
    params = np.asarray(params, dtype=float)
    steps = _default_steps(params, step)
    points = []
    for i in range(len(params)):
        for sign in (1.0, -1.0):
            q = params.copy()
            q[i] += sign * steps[i]
            points.append(q)
    vals = [np.asarray(v, dtype=float) for v in _evaluate(fn, points, threads)]
    return np.column_stack([(vals[2 * i] - vals[2 * i + 1]) / (2 * steps[i]) for i in range(len(params))])


# -- reconstruction ----------------------------------------------------------


def tikhonov_solve(A, d, alpha):
    """Minimize ``0.5 |A c - d|^2 + alpha |c|^2`` through an SVD-based least-squares solve."""
    if alpha > 0:
        A = np.vstack([A, math.sqrt(2 * alpha) * np.eye(A.shape[1])])
        d = np.concatenate([d, np.zeros(A.shape[1])])
    return np.linalg.lstsq(A, d, rcond=None)[0]


@dataclass(frozen=True)
class ReconstructOptions:
    alpha: float = 0.0
    max_iter: int = 20
    tol: float = 1e-6
    lm_lambda: float = 1e-2
    fd_step: float = 1e-6
    freeze_fault: bool = False


@dataclass(eq=False)
class Reconstruction:
    fault: FaultParam
    slip: SlipParam
    trace: list
    converged: bool
    rejected: list = field(default_factory=list)

    def trace_csv(self):
        m, p = len(self.fault.heights), self.slip.p
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "J"] + [f"theta{i}" for i in range(m)] + [f"c{i}" for i in range(p)])
        for row in self.trace:
            w.writerow([row["iter"], repr(row["J"])] + [repr(v) for v in row["theta"]] + [repr(v) for v in row["c"]])
        return buf.getvalue()


def reconstruct(data, init, setup, options=None):
    """Alternate an exact Tikhonov solve in the slip with a Levenberg-Marquardt step in the heights.

    The Levenberg-Marquardt step uses the reduced residual, in which the slip
    is the Tikhonov solution for the perturbed heights (variable projection).

    Stops when the relative decrease of ``J`` drops below ``tol`` or the
    misfit vanishes to round-off. On hitting ``max_iter`` a NonConvergence
    warning is emitted and the best iterate is returned with ``converged=False``.
    """
    opts = options or ReconstructOptions()
    fp, sp = init
    if sp.p != setup.p:
        raise DimensionError(f"initial slip has {sp.p} coefficients, setup expects {setup.p}")
    d = data.vector
    if len(d) != 2 * len(setup.points):
        raise DimensionError("data length does not match the sample set")
    setup = replace(setup, opts=replace(setup.opts, base=float(np.mean(fp.heights)) if setup.opts.base is None else setup.opts.base))
    D2 = second_difference(len(fp.heights))
    floor = 0.5 * (1e-12 * max(np.linalg.norm(d), 1e-300)) ** 2

    def solve_slip(theta):
        A = forward_operator(fp.with_heights(theta), setup)
        c = tikhonov_solve(A, d, opts.alpha)
        return A, c, misfit_value(A @ c, d, c, theta, opts.alpha)

    def residual(theta):
        # reduced residual: the slip is eliminated by the exact inner solve, 0.5 |r|^2 = J
        A, c, _ = solve_slip(theta)
        w = math.sqrt(2 * opts.alpha)
        return np.concatenate([A @ c - d, w * c, w * (D2 @ theta)])

    theta = np.array(fp.heights)
    A, c, J = solve_slip(theta)
    trace = [{"iter": 0, "J": J, "theta": theta.tolist(), "c": c.tolist()}]
    rejected = []
    lam = opts.lm_lambda
    converged = J <= floor or opts.freeze_fault
    it = 0
    while not converged and it < opts.max_iter:
        it += 1
        r = residual(theta)
        Jac = fd_jacobian(residual, theta, step=opts.fd_step, threads=setup.threads)
        JtJ = Jac.T @ Jac
        g = Jac.T @ r
        accepted = False
        for _ in range(8):
            step = np.linalg.solve(JtJ + lam * np.diag(np.diag(JtJ) + 1e-12 * np.trace(JtJ) + 1e-300), -g)
            trial = theta + step
            try:
                A_t, c_t, J_t = solve_slip(trial)
            except GeometryError as exc:
                rejected.append({"iter": it, "lambda": lam, "reason": str(exc)})
                lam *= 10.0
                continue
            if J_t < J:
                accepted = True
                break
            rejected.append({"iter": it, "lambda": lam, "J": J_t})
            lam *= 10.0
        if not accepted:
            converged = True
            break
        lam = max(lam / 10.0, 1e-12)
        decrease = (J - J_t) / max(J, 1e-300)
        theta, c, J = trial, c_t, J_t
        trace.append({"iter": it, "J": J, "theta": theta.tolist(), "c": c.tolist()})
        if decrease < opts.tol or J <= floor:
            converged = True
    if not converged:
        warnings.warn(f"reconstruction stopped after {opts.max_iter} iterations (J = {J:.3e})", NonConvergence)
    return Reconstruction(fp.with_heights(theta), SlipParam(tuple(c)), trace, converged, rejected)


# -- experiments -------------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    gap: float
    floor: float
    norm1: float
    norm2: float

    @property
    def distinguishable(self):
        return self.gap > self.floor


def distinguishability_experiment(case1, case2, setup, floor=1e-3):
    """Relative data gap of two (fault, slip) cases on the common sample set."""
    F1 = forward_map(*case1, setup).vector
    F2 = forward_map(*case2, setup).vector
    n1, n2 = float(np.linalg.norm(F1)), float(np.linalg.norm(F2))
    scale = max(n1, n2)
    gap = 0.0 if scale == 0.0 else float(np.linalg.norm(F1 - F2) / scale)
    return GapReport(gap, floor, n1, n2)


def add_noise(data, sigma, seed):
    """I.i.d. Gaussian noise per component with a fixed seed."""
    rng = np.random.default_rng(seed)
    return SurfaceData(data.points, data.values + sigma * rng.standard_normal(data.values.shape), sigma)


def default_model():
    mat = {"lambda": [1.0, 0.0, 0.0], "mu": [1.0, 0.0, 0.0]}
    return build_elastic_model({PLUS_REGION: mat, MINUS_REGION: mat}, {"alpha0": 0.5, "beta0": 1.0, "M": 10.0})


def default_fault(height=0.05, angle=0.0, m=5):
    return FaultParam(angle, tuple(np.linspace(-0.2, 0.2, m)), (height,) * m)


def default_setup(p=8, h=0.04, model=None, threads=None):
    """Homogeneous unit-square scenario; samples on the middle quarter of the top edge."""
    opts = MeshingOptions(h=h)
    mesh, _ = realize_fault(default_fault(), opts)
    return InverseSetup(model or default_model(), opts, p, xi_sampling(mesh), threads=threads)


def default_pair(setup=None):
    """Two parallel horizontal faults a tenth of the diameter apart, same slip."""
    sep = 0.1 * math.sqrt(2.0)
    c = SlipParam((1.0, 0.5, 0.0, 0.0, 0.5, 0.25, 0.0, 0.0)[: (setup.p if setup else 8)])
    return (default_fault(0.05), c), (default_fault(0.05 - sep), c)
