"""Direct solvers for a prescribed displacement jump across a buried fault.

Two independent discretizations of the same problem are provided:

* split node: interior fault nodes are duplicated and the jump constraint
  ``u(copy) - u(original) = g`` is eliminated into the load vector;
* interface equation: the body is cut along ``Gamma``, the boundary of
  Omega_minus, and the Neumann-to-Dirichlet maps of both sides are coupled
  through a Galerkin equation for the interface traction ``phi``.

The plus side is the side the fault normal points into, and the jump is
``[u] = u_plus - u_minus``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InvariantError, SolveError
from .fem import (
    DisplacementField,
    DofMap,
    Factorization,
    SlipField,
    assemble_stiffness,
    element_stress,
    field_l2,
    lumped_mass,
    mass_matrix_1d,
    pcg,
    rigid_motion_basis,
    scatter,
    solve_spd,
)
from .mesh import split_fault_nodes, split_parent


@dataclass(frozen=True, eq=False)
class BoundaryConditions:
    """Clamped facet tags and element-owned load contributions (M, 3, 2).

    Loads live on the unsplit element list, so they scatter identically into
    the merged, split or subdomain numberings. Fault facet loads must be owned
    by the Omega_plus element.
    """

    sigma_tags: frozenset
    loads: np.ndarray = None

    def sigma_nodes(self, mesh):
        return mesh.nodes_with_tags(self.sigma_tags) if self.sigma_tags else np.zeros(0, dtype=np.int64)

    def load_contributions(self, mesh):
        return np.zeros((mesh.n_elements, 3, 2)) if self.loads is None else self.loads


@dataclass(frozen=True)
class TransmissionReport:
    """Residuals of the transmission conditions.

    Attributes:
        jump_error: max nodal ``|[u] - g|`` over interior fault nodes.
        gamma_jump: max nodal ``|[u]|`` on unsplit interface nodes.
        traction_jump_s: mass-weighted dual norm of the two-sided consistent flux sum on the fault.
        traction_jump_gamma: the same on Gamma minus the closed fault.
        flux_jump_gamma: dual norm of the element stress jump ``(sigma_minus - sigma_plus) n``
            on Gamma minus the closed fault; a consistency indicator that decays under refinement.
        interior_residual: ``|K u - l|`` over free dofs with continuous test functions.
        load_norm: ``|l|`` of the same functional, for scaling.
        traction_scale: dual norm of the one-sided (Omega_minus) flux on Gamma, for scaling
            the two-sided traction residuals.
    """

    jump_error: float
    gamma_jump: float
    traction_jump_s: float
    traction_jump_gamma: float
    flux_jump_gamma: float
    interior_residual: float
    load_norm: float
    traction_scale: float = 0.0

    def rows(self):
        return [(k, getattr(self, k)) for k in self.__dataclass_fields__]


@dataclass(eq=False)
class DirectSolution:
    """Displacement on the split mesh with the data needed for diagnostics."""

    field: DisplacementField
    method: str
    mesh: object
    split_mesh: object
    ft: object
    model: object
    bc: BoundaryConditions
    slip: SlipField
    report: TransmissionReport = None
    gamma_sides: tuple = None
    info: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.field.values

    @property
    def parent(self):
        return split_parent(self.mesh.n_nodes, self.ft)


# -- slip data ---------------------------------------------------------------


def extend_slip(slip, ft):
    """Zero extension of the slip to all Gamma nodes; returns (nodes, values (k, 2))."""
    values = np.zeros((len(ft.gamma_nodes), 2))
    interior = np.isin(ft.gamma_nodes, ft.s_interior_nodes)
    values[interior] = slip.at(ft.gamma_nodes[interior])
    return ft.gamma_nodes, values


def _lift(slip, ft, n_original):
    """Split-mesh field carrying the slip on the plus copies, zero elsewhere."""
    G = np.zeros((n_original + len(ft.split_map), 2))
    if ft.split_map:
        originals = ft.s_interior_nodes
        copies = np.array([ft.split_map[int(v)] for v in originals])
        G[copies] = slip.at(originals)
    return G


def _fold(vec, parent, n_original):
    """Transpose of ``u -> u[parent]`` for interleaved (2 Ns,) vectors."""
    v = np.asarray(vec).reshape(-1, 2)
    out = np.empty((n_original, 2))
    out[:, 0] = np.bincount(parent, weights=v[:, 0], minlength=n_original)
    out[:, 1] = np.bincount(parent, weights=v[:, 1], minlength=n_original)
    return out.ravel()


# -- split-node method ---------------------------------------------------------


def solve_continuous(mesh, model, bc, method="direct", tol=1e-10, maxiter_factor=10):
    """Standard clamped solve on the unsplit mesh; returns nodal values (N, 2)."""
    dm = DofMap.build(mesh.n_nodes, bc.sigma_nodes(mesh))
    K = assemble_stiffness(mesh, model, dofmap=dm)
    rhs = dm.restrict(scatter(bc.load_contributions(mesh), mesh.elements, mesh.n_nodes))
    x = solve_spd(K, rhs, tol=tol, maxiter_factor=maxiter_factor, method=method)
    return dm.expand(x).reshape(-1, 2)


def solve_split_node(mesh, model, ft, slip, bc, method="direct", tol=1e-10, verify=True, maxiter_factor=10):
    """Single clamped solve on the split mesh with the jump eliminated by substitution.

    The unknowns are the merged nodal values ``u_m``; the split field is
    ``u_m[parent] + G`` with ``G`` the slip on the plus copies. The reduced
    matrix is the unsplit stiffness, so ``g = 0`` reproduces the continuous
    solve exactly.
    """
    slip.check(ft)
    n = mesh.n_nodes
    split = split_fault_nodes(mesh, ft)
    parent = split_parent(n, ft)
    G = _lift(slip, ft, n)
    dm = DofMap.build(n, bc.sigma_nodes(mesh))
    K = assemble_stiffness(mesh, model, dofmap=dm)
    loads = bc.load_contributions(mesh)
    rhs = scatter(loads, mesh.elements, n)
    if ft.split_map:
        rhs = rhs - _fold(assemble_stiffness(split, model) @ G.ravel(), parent, n)
    x = solve_spd(K, dm.restrict(rhs), tol=tol, maxiter_factor=maxiter_factor, method=method)
    values = dm.expand(x).reshape(-1, 2)[parent] + G
    sol = DirectSolution(DisplacementField(split, values), "split_node", mesh, split, ft, model, bc, slip)
    if verify:
        sol.report = verify_transmission(sol)
    return sol


# -- interface method ----------------------------------------------------------


def _dofs(nodes):
    return np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()


class InterfaceOperator:
    """Neumann-to-Dirichlet maps of both subdomains on the Gamma trace space.

    Gamma vectors are interleaved nodal values over ``gamma_nodes``. The
    duality pairing is the consistent P1 mass matrix of Gamma. The plus side
    is clamped on Sigma; the minus side is a pure Neumann problem bordered by
    three rigid-motion multipliers. Both factorizations are computed once.
    """

    def __init__(self, mesh, model, ft, bc):
        self.mesh, self.model, self.ft, self.bc = mesh, model, ft, bc
        minus = ft.minus_elements
        plus = ~minus
        if not minus.any() or not plus.any():
            raise DomainError("both Omega_minus and Omega_plus must be non-empty")
        self.gamma_nodes = ft.gamma_nodes
        K_all_plus = assemble_stiffness(mesh, model, plus)
        K_all_minus = assemble_stiffness(mesh, model, minus)

        sigma = bc.sigma_nodes(mesh)
        self.plus_nodes = np.setdiff1d(np.unique(mesh.elements[plus]), sigma)
        self.minus_nodes = np.unique(mesh.elements[minus])
        self.plus_dofs = _dofs(self.plus_nodes)
        self.minus_dofs = _dofs(self.minus_nodes)
        self.K_plus = K_all_plus[self.plus_dofs][:, self.plus_dofs].tocsc()
        self.K_minus = K_all_minus[self.minus_dofs][:, self.minus_dofs].tocsc()

        R, m = rigid_motion_basis(mesh, minus)
        self.rigid = R[self.minus_dofs]
        C = np.repeat(m, 2)[self.minus_dofs][:, None] * self.rigid
        self.constraints = C
        bordered = sp.bmat([[self.K_minus, sp.csc_matrix(C)], [sp.csc_matrix(C.T), None]], format="csc")
        self._plus = Factorization(self.K_plus)
        self._minus = Factorization(bordered)
        self._bordered = bordered

        pos_plus = np.searchsorted(self.plus_nodes, self.gamma_nodes)
        pos_minus = np.searchsorted(self.minus_nodes, self.gamma_nodes)
        if not (np.all(self.plus_nodes[np.minimum(pos_plus, len(self.plus_nodes) - 1)] == self.gamma_nodes)
                and np.all(self.minus_nodes[pos_minus] == self.gamma_nodes)):
            raise DomainError("Gamma nodes must be free nodes of both subdomains")
        self.trace_plus = _dofs(pos_plus)
        self.trace_minus = _dofs(pos_minus)

        local = -np.ones(mesh.n_nodes, dtype=np.int64)
        local[self.gamma_nodes] = np.arange(len(self.gamma_nodes))
        Ms = mass_matrix_1d(mesh.nodes, local[ft.gamma_facets], len(self.gamma_nodes))
        self.mass = sp.kron(Ms, sp.identity(2), format="csr")
        self.mass_lumped = np.asarray(self.mass.sum(axis=1)).ravel()
        self.rigid_trace = self.rigid[self.trace_minus]
        self.n_gamma = 2 * len(self.gamma_nodes)
        self._mass_lu = Factorization(self.mass)
        self._schur = [
            _SchurComplement(self.K_plus, self.trace_plus),
            _SchurComplement(self.K_minus, self.trace_minus),
        ]
        dp, dm = (sc.diagonal for sc in self._schur)
        self._scaling = (dm / (dp + dm), dp / (dp + dm))

        loads = bc.load_contributions(mesh)
        self.load_plus = scatter(loads, mesh.elements, mesh.n_nodes, plus)[self.plus_dofs]
        self.load_minus = scatter(loads, mesh.elements, mesh.n_nodes, minus)[self.minus_dofs]

    # subdomain solves
    def solve_plus(self, phi, with_loads=False):
        rhs = self.load_plus.copy() if with_loads else np.zeros(len(self.plus_dofs))
        rhs[self.trace_plus] -= self.mass @ phi
        return self._plus.solve(rhs)

    def solve_minus(self, phi, with_loads=False):
        rhs = np.zeros(len(self.minus_dofs) + 3)
        if with_loads:
            rhs[:len(self.minus_dofs)] = self.load_minus
        rhs[self.trace_minus] += self.mass @ phi
        x = self._minus.solve(rhs)
        return x[:len(self.minus_dofs)], x[len(self.minus_dofs):]

    def precondition(self, r):
        """Stiffness-scaled sum of the subdomain Schur complements between inverse Gamma masses.

        ``A = M (S_plus^-1 + S_minus^-1) M``, so ``M^-1 (D S_plus D + D' S_minus D') M^-1``
        approximates its inverse with the harmonic-mean weighting of both sides.
        """
        v = self._mass_lu.solve(r)
        z = sum(d * sc.apply(d * v) for d, sc in zip(self._scaling, self._schur))
        return self._mass_lu.solve(z)

    def apply(self, phi):
        """Galerkin matrix of ``-N_plus + N_minus`` applied to ``phi``."""
        return self.mass @ (apply_nd_minus(self, phi) - apply_nd_plus(self, phi))


class _SchurComplement:
    """``K_GG - K_GI K_II^-1 K_IG`` applied matrix-free, with ``K_II`` factorized."""

    def __init__(self, K, gamma):
        inner = np.setdiff1d(np.arange(K.shape[0]), gamma)
        K = K.tocsr()
        self.gg = K[gamma][:, gamma]
        self.gi = K[gamma][:, inner]
        self.ig = K[inner][:, gamma]
        self._lu = Factorization(K[inner][:, inner])
        self.diagonal = self.gg.diagonal()

    def apply(self, v):
        return self.gg @ v - self.gi @ self._lu.solve(self.ig @ v)


def build_interface_operator(mesh, model, ft, bc):
    return InterfaceOperator(mesh, model, ft, bc)


def apply_nd_plus(op, phi):
    """Trace on Gamma of the clamped Omega_plus solution with interface traction ``phi``."""
    return op.solve_plus(np.asarray(phi, dtype=float))[op.trace_plus]


def apply_nd_minus(op, phi):
    """Trace on Gamma of the rigid-motion-free Omega_minus Neumann solution."""
    return op.solve_minus(np.asarray(phi, dtype=float))[0][op.trace_minus]


def interface_matrix(op):
    """Dense Galerkin matrix of ``-N_plus + N_minus`` (one column per trace dof)."""
    eye = np.eye(op.n_gamma)
    return np.column_stack([op.apply(eye[:, k]) for k in range(op.n_gamma)])


def interface_rhs(op, g_tilde):
    """Right-hand sides ``(f, d)`` of the constrained interface equation.

    ``f = -M (g - t_plus0 + t_minus0)`` uses the load-only traces; ``d`` makes
    the Omega_minus data compatible with its rigid motions.
    """
    g = np.asarray(g_tilde, dtype=float).ravel()
    t_plus0 = op.solve_plus(np.zeros(op.n_gamma), with_loads=True)[op.trace_plus]
    t_minus0 = op.solve_minus(np.zeros(op.n_gamma), with_loads=True)[0][op.trace_minus]
    f = -(op.mass @ (g - t_plus0 + t_minus0))
    d = -(op.rigid.T @ op.load_minus)
    return f, d


def solve_interface_equation(op, g_tilde, tol=1e-10, maxiter=None):
    """Solve for the interface traction ``phi`` and the rigid shift ``c`` of Omega_minus.

    The Galerkin equation ``A phi + B c = f`` with ``A = M (-N_plus + N_minus)``
    and ``B = M T_minus R`` is closed by the compatibility constraint
    ``B^T phi = d``. It is solved by conjugate gradients on the null space of
    ``B^T`` with the Schur-complement preconditioner of the operator.
    Returns ``(phi, c, iterations)``.
    """
    f, d = interface_rhs(op, g_tilde)
    B = op.mass @ op.rigid_trace
    BtB = B.T @ B
    phi0 = B @ np.linalg.solve(BtB, d)

    def project(v):
        return v - B @ np.linalg.solve(BtB, B.T @ v)

    b = project(f - op.apply(phi0))
    try:
        phi_p, iters = pcg(
            lambda v: project(op.apply(project(v))), b, tol=tol,
            maxiter=maxiter if maxiter is not None else 10 * op.n_gamma,
            precond=lambda r: project(op.precondition(project(r))),
        )
    except SolveError as exc:
        raise SolveError(f"interface CG failed ({exc}); the interface operator may not be coercive") from None
    phi = project(phi_p) + phi0
    c = np.linalg.solve(BtB, B.T @ (f - op.apply(phi)))
    return phi, c, iters


def assemble_dislocation_solution(op, phi, c, slip, verify=True):
    """Final subdomain solves written to the split mesh.

    Split copies carry the plus values. Unsplit Gamma nodes receive the mean of
    both sides (which agree up to the interface tolerance); the separate side
    traces are kept for diagnostics.
    """
    mesh, ft = op.mesh, op.ft
    n = mesh.n_nodes
    split = split_fault_nodes(mesh, ft)
    u_plus = op.solve_plus(phi, with_loads=True)
    u_minus = op.solve_minus(phi, with_loads=True)[0] + op.rigid @ c

    plus_vals = np.zeros((n, 2))
    plus_vals[op.plus_nodes] = u_plus.reshape(-1, 2)
    minus_vals = np.zeros((n, 2))
    minus_vals[op.minus_nodes] = u_minus.reshape(-1, 2)

    values = np.zeros((split.n_nodes, 2))
    values[op.plus_nodes] = plus_vals[op.plus_nodes]
    values[op.minus_nodes] = minus_vals[op.minus_nodes]
    gamma = op.gamma_nodes
    values[gamma] = 0.5 * (plus_vals[gamma] + minus_vals[gamma])
    for v, copy in ft.split_map.items():
        values[v] = minus_vals[v]
        values[copy] = plus_vals[v]
    sol = DirectSolution(
        DisplacementField(split, values), "interface", mesh, split, ft, op.model, op.bc, slip,
        gamma_sides=(gamma, plus_vals[gamma], minus_vals[gamma]),
    )
    if verify:
        sol.report = verify_transmission(sol)
    return sol


def solve_interface(mesh, model, ft, slip, bc, tol=1e-10, verify=True, op=None):
    """Interface-equation solve end to end; ``info`` records iterations and ``phi``."""
    slip.check(ft)
    op = op or InterfaceOperator(mesh, model, ft, bc)
    _, g_tilde = extend_slip(slip, ft)
    phi, c, iters = solve_interface_equation(op, g_tilde, tol=tol)
    sol = assemble_dislocation_solution(op, phi, c, slip, verify=verify)
    sol.info.update(iterations=iters, phi=phi, rigid_shift=c, n_gamma_dofs=op.n_gamma)
    return sol


def solve(mesh, model, ft, slip, bc, method="split", tol=1e-10):
    if method in ("split", "split_node"):
        return solve_split_node(mesh, model, ft, slip, bc, tol=tol)
    if method == "interface":
        return solve_interface(mesh, model, ft, slip, bc, tol=tol)
    raise DomainError(f"unknown method '{method}'")


# -- Neumann variant -----------------------------------------------------------


def _neumann_solve(mesh, split, model, ft, parent, loads, G):
    """Pure traction problem on the split mesh, orthogonal to rigid motions of the whole body."""
    n = mesh.n_nodes
    K = assemble_stiffness(mesh, model).tocsc()
    R, m = rigid_motion_basis(mesh)
    C = np.repeat(m, 2)[:, None] * R
    rhs = scatter(loads, mesh.elements, n) - _fold(assemble_stiffness(split, model) @ G.ravel(), parent, n)
    m_split = np.repeat(lumped_mass(split), 2)
    d = -(R.reshape(n, 2, 3)[parent].reshape(-1, 3).T @ (m_split * G.ravel()))
    A = sp.bmat([[K, sp.csc_matrix(C)], [sp.csc_matrix(C.T), None]], format="csc")
    x = Factorization(A).solve(np.concatenate([rhs, d]))
    return x[:2 * n].reshape(-1, 2)[parent] + G


def solve_neumann_variant(mesh, model, ft, slip, loads=None, tol=1e-9):
    """Traction problem on the whole boundary with slip, normalized against rigid motions.

    Solves the slip-only problem and the load-only problem separately and
    returns their sum; a combined solve checks superposition, and the relative
    difference is recorded in ``info["superposition_error"]``.
    """
    slip.check(ft)
    n = mesh.n_nodes
    split = split_fault_nodes(mesh, ft)
    parent = split_parent(n, ft)
    G = _lift(slip, ft, n)
    loads = np.zeros((mesh.n_elements, 3, 2)) if loads is None else loads
    zero_loads = np.zeros_like(loads)
    u_slip = _neumann_solve(mesh, split, model, ft, parent, zero_loads, G)
    w = _neumann_solve(mesh, split, model, ft, parent, loads, np.zeros_like(G))
    combined = _neumann_solve(mesh, split, model, ft, parent, loads, G)
    total = u_slip + w
    scale = max(np.linalg.norm(total), np.linalg.norm(combined))
    err = 0.0 if scale == 0.0 else float(np.linalg.norm(combined - total) / scale)
    if err > tol:
        raise InvariantError(f"superposition defect {err:.3e} exceeds {tol:.1e}")
    bc = BoundaryConditions(frozenset(), loads)
    sol = DirectSolution(DisplacementField(split, total), "neumann", mesh, split, ft, model, bc, slip)
    sol.info.update(slip_part=u_slip, load_part=w, combined=combined, superposition_error=err)
    return sol


# -- diagnostics ---------------------------------------------------------------


def _dual_norm(t, m):
    keep = m > 0
    return float(np.sqrt(((t[keep] ** 2).sum(axis=1) / m[keep]).sum()))


def _gamma_mass(mesh, facets):
    length = np.hypot(*(mesh.nodes[facets[:, 1]] - mesh.nodes[facets[:, 0]]).T)
    return np.bincount(facets.ravel(), weights=np.repeat(length / 2, 2), minlength=mesh.n_nodes)


def verify_transmission(sol, values=None):
    """Evaluate the transmission residuals of ``sol`` (or of ``values`` on its split mesh)."""
    mesh, split, ft, model = sol.mesh, sol.split_mesh, sol.ft, sol.model
    u = sol.values if values is None else np.asarray(values, dtype=float).reshape(-1, 2)
    n = mesh.n_nodes
    parent = split_parent(n, ft)
    loads = sol.bc.load_contributions(mesh)
    plus_id = np.arange(n)
    for v, copy in ft.split_map.items():
        plus_id[v] = copy

    # (a) fault jump and (b) jump on unsplit interface nodes
    interior = ft.s_interior_nodes
    if len(interior):
        jump = u[plus_id[interior]] - u[interior] - sol.slip.at(interior)
        jump_error = float(np.abs(jump).max())
    else:
        jump_error = 0.0
    gamma_jump = 0.0
    if sol.gamma_sides is not None:
        nodes, up, um = sol.gamma_sides
        unsplit = ~np.isin(nodes, interior)
        if unsplit.any():
            gamma_jump = float(np.abs(up[unsplit] - um[unsplit]).max())

    # (c) two-sided consistent flux sums
    minus = ft.minus_elements
    K_plus = assemble_stiffness(split, model, ~minus)
    K_minus = assemble_stiffness(split, model, minus)
    r_plus = (K_plus @ u.ravel()).reshape(-1, 2) - scatter(loads, split.elements, split.n_nodes, ~minus).reshape(-1, 2)
    r_minus = (K_minus @ u.ravel()).reshape(-1, 2) - scatter(loads, split.elements, split.n_nodes, minus).reshape(-1, 2)
    t = np.zeros((n, 2))
    g_nodes = ft.gamma_nodes
    t[g_nodes] = r_plus[plus_id[g_nodes]] + r_minus[g_nodes]
    m_gamma = _gamma_mass(mesh, ft.gamma_facets)
    on_s = np.zeros(n, bool)
    on_s[interior] = True
    off_s = np.zeros(n, bool)
    off_s[g_nodes] = True
    off_s[ft.s_nodes] = False
    traction_s = _dual_norm(t[on_s], m_gamma[on_s])
    traction_gamma = _dual_norm(t[off_s], m_gamma[off_s])
    traction_scale = _dual_norm(r_minus[g_nodes], m_gamma[g_nodes])

    # element stress jump across Gamma minus the closed fault
    facets = ft.gamma_off_s_facets
    flux = 0.0
    if len(facets):
        stress = element_stress(split, model, u)
        ee = mesh.edge_elements[mesh.edge_index(facets)]
        a_minus = np.where(minus[ee[:, 0]], ee[:, 0], ee[:, 1])
        b_plus = np.where(minus[ee[:, 0]], ee[:, 1], ee[:, 0])
        d = mesh.nodes[facets[:, 1]] - mesh.nodes[facets[:, 0]]
        length = np.hypot(d[:, 0], d[:, 1])
        nrm = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        ds = stress[a_minus] - stress[b_plus]
        jump = np.column_stack([ds[:, 0] * nrm[:, 0] + ds[:, 2] * nrm[:, 1], ds[:, 2] * nrm[:, 0] + ds[:, 1] * nrm[:, 1]])
        tn = np.zeros((n, 2))
        np.add.at(tn, facets[:, 0], jump * (length / 2)[:, None])
        np.add.at(tn, facets[:, 1], jump * (length / 2)[:, None])
        flux = _dual_norm(tn, _gamma_mass(mesh, facets))

    # (d) interior residual with continuous test functions
    r = _fold((r_plus + r_minus).ravel(), parent, n).reshape(-1, 2)
    load = _fold(scatter(loads, split.elements, split.n_nodes), parent, n).reshape(-1, 2)
    free = np.ones(n, bool)
    free[sol.bc.sigma_nodes(mesh)] = False
    return TransmissionReport(
        jump_error=jump_error,
        gamma_jump=gamma_jump,
        traction_jump_s=traction_s,
        traction_jump_gamma=traction_gamma,
        flux_jump_gamma=flux,
        interior_residual=float(np.linalg.norm(r[free])),
        load_norm=float(np.linalg.norm(load[free])),
        traction_scale=traction_scale,
    )


def relative_l2_difference(split_mesh, a, b):
    """``|a - b|_L2 / max(|a|_L2, |b|_L2)`` for P1 fields on the same split mesh."""
    diff = field_l2(split_mesh, np.asarray(a) - np.asarray(b))
    scale = max(field_l2(split_mesh, a), field_l2(split_mesh, b))
    return 0.0 if scale == 0.0 else diff / scale
