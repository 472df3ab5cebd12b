import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislox.dislocation import (
    BoundaryConditions,
    InterfaceOperator,
    apply_nd_minus,
    apply_nd_plus,
    extend_slip,
    interface_rhs,
    relative_l2_difference,
    solve,
    solve_continuous,
    solve_interface,
    solve_interface_equation,
    solve_neumann_variant,
    solve_split_node,
    verify_transmission,
)
from dislox.errors import DomainError, InvariantError
from dislox.fem import GAUSS3, SlipField, body_force_contributions, traction_contributions
from dislox.generate import BOTTOM, RIGHT, TOP, square_roles, structured_square
from dislox.material import build_elastic_model
from dislox.mesh import build_fault_topology, split_parent

from conftest import fault_square


def bump_slip(mesh, ft, amp=0.01, direction=(1.0, 0.0)):
    def fn(x):
        t = (x[:, 0] - 0.25) / 0.5
        return amp * (16 * t ** 2 * (1 - t) ** 2)[:, None] * np.asarray(direction)[None, :]
    return SlipField.from_function(mesh, ft, fn)


def clamped(mesh, loads=None):
    return BoundaryConditions(frozenset({BOTTOM}), loads)


def body_loads(mesh):
    return body_force_contributions(mesh, np.array([0.1, -1.0])) + traction_contributions(mesh, {TOP: np.array([0.5, 0.0])})


@pytest.fixture(scope="module")
def setting():
    mesh, roles, ft, model = fault_square(8)
    bc = clamped(mesh)
    return mesh, ft, model, bc, InterfaceOperator(mesh, model, ft, bc)


def test_extend_slip_zero(setting):
    mesh, ft, *_ = setting
    nodes, values = extend_slip(SlipField.zero(ft), ft)
    assert np.array_equal(nodes, ft.gamma_nodes) and np.all(values == 0.0)


def test_extend_slip_hat_support(setting):
    mesh, ft, *_ = setting
    vals = np.zeros((len(ft.s_nodes), 2))
    k = int(np.flatnonzero(np.isin(ft.s_nodes, ft.s_interior_nodes))[0])
    vals[k] = (1.0, -2.0)
    _, values = extend_slip(SlipField(ft.s_nodes, vals), ft)
    assert np.count_nonzero(np.abs(values).sum(axis=1)) == 1


def l2_on_segments(nodes, segments, value_of):
    s, w = GAUSS3
    total = 0.0
    for a, b in segments.tolist():
        length = np.linalg.norm(nodes[b] - nodes[a])
        g = np.outer(1 - s, value_of(a)) + np.outer(s, value_of(b))
        total += length * (w * (g ** 2).sum(axis=1)).sum()
    return np.sqrt(total)


def test_extension_preserves_l2(setting):
    mesh, ft, *_ = setting
    slip = bump_slip(mesh, ft, 1.0, (0.3, 1.0))
    nodes, values = extend_slip(slip, ft)
    lookup = {int(v): values[i] for i, v in enumerate(nodes)}
    on_gamma = l2_on_segments(mesh.nodes, ft.gamma_facets, lambda v: lookup[v])
    on_s = l2_on_segments(mesh.nodes, ft.s_facets, lambda v: slip.at([v])[0])
    assert on_gamma == pytest.approx(on_s, rel=1e-14)


def test_nd_maps_zero_and_linear(setting, rng):
    *_, op = setting
    assert np.all(apply_nd_plus(op, np.zeros(op.n_gamma)) == 0.0)
    assert np.all(apply_nd_minus(op, np.zeros(op.n_gamma)) == 0.0)
    p1, p2 = rng.standard_normal((2, op.n_gamma))
    for nd in (apply_nd_plus, apply_nd_minus):
        lhs = nd(op, 2.0 * p1 - 3.0 * p2)
        rhs = 2.0 * nd(op, p1) - 3.0 * nd(op, p2)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_nd_sign_definiteness(setting, rng):
    *_, op = setting
    for _ in range(50):
        phi = rng.standard_normal(op.n_gamma)
        mphi = op.mass @ phi
        assert mphi @ apply_nd_plus(op, phi) <= 0.0
        assert mphi @ apply_nd_minus(op, phi) >= 0.0


def test_minus_solution_orthogonal_to_rigid_motions(setting, rng):
    *_, op = setting
    u, _ = op.solve_minus(rng.standard_normal(op.n_gamma))
    assert np.abs(op.constraints.T @ u).max() <= 1e-10 * max(1.0, np.abs(u).max())


def test_interface_equation_zero_and_scaling(setting):
    mesh, ft, model, bc, op = setting
    phi, c, _ = solve_interface_equation(op, np.zeros(op.n_gamma))
    assert np.all(phi == 0.0) and np.all(c == 0.0)
    _, g = extend_slip(bump_slip(mesh, ft), ft)
    phi1, c1, _ = solve_interface_equation(op, g, tol=1e-12)
    phi2, c2, _ = solve_interface_equation(op, 2 * g, tol=1e-12)
    assert np.linalg.norm(phi2 - 2 * phi1) <= 1e-9 * np.linalg.norm(phi2)


def test_interface_equation_residual(setting):
    mesh, ft, model, bc, op = setting
    _, g = extend_slip(bump_slip(mesh, ft), ft)
    phi, c, _ = solve_interface_equation(op, g)
    f, d = interface_rhs(op, g)
    r = op.apply(phi) + op.mass @ (op.rigid_trace @ c) - f
    # dual norm of the residual against the M-norm of the datum
    dual = np.sqrt(r @ op._mass_lu.solve(r))
    gm = np.sqrt(g.ravel() @ (op.mass @ g.ravel()))
    assert dual <= 1e-8 * gm


def test_interface_zero_slip_no_load_is_zero(setting):
    mesh, ft, model, bc, op = setting
    sol = solve_interface(mesh, model, ft, SlipField.zero(ft), bc, op=op)
    assert np.abs(sol.values).max() == 0.0


def test_interface_jump_and_traction(setting):
    mesh, ft, model, bc, op = setting
    slip = bump_slip(mesh, ft)
    sol = solve_interface(mesh, model, ft, slip, bc, op=op)
    r = sol.report
    assert r.jump_error <= 1e-8 * np.abs(slip.values).max()
    assert r.gamma_jump <= 1e-8 * np.abs(slip.values).max()
    assert r.traction_jump_gamma <= 1e-8 * r.traction_scale
    assert r.traction_jump_s <= 1e-8 * r.traction_scale


def test_split_node_zero_slip_matches_continuous():
    mesh, _, ft, model = fault_square(8)
    bc = clamped(mesh, body_loads(mesh))
    sol = solve_split_node(mesh, model, ft, SlipField.zero(ft), bc)
    u = solve_continuous(mesh, model, bc)
    parent = split_parent(mesh.n_nodes, ft)
    assert np.abs(sol.values - u[parent]).max() <= 1e-12 * np.abs(u).max()


def test_split_node_jump_exact():
    mesh, _, ft, model = fault_square(8)
    slip = bump_slip(mesh, ft)
    sol = solve_split_node(mesh, model, ft, slip, clamped(mesh))
    assert sol.report.jump_error == 0.0
    plus = np.array([ft.split_map[int(v)] for v in ft.s_interior_nodes])
    assert np.array_equal(sol.values[plus] - sol.values[ft.s_interior_nodes], slip.at(ft.s_interior_nodes))


@pytest.mark.parametrize("n", [8, 16])
def test_methods_agree(n):
    mesh, _, ft, model = fault_square(n)
    bc = clamped(mesh, body_loads(mesh))
    slip = bump_slip(mesh, ft)
    a = solve(mesh, model, ft, slip, bc, method="split")
    b = solve(mesh, model, ft, slip, bc, method="interface")
    assert relative_l2_difference(a.split_mesh, a.values, b.values) <= 1e-6


def test_unknown_method():
    mesh, _, ft, model = fault_square(8)
    with pytest.raises(DomainError):
        solve(mesh, model, ft, SlipField.zero(ft), clamped(mesh), method="magic")


def test_extension_independence():
    fault = ((0.25, 0.5), (0.75, 0.5))
    results = []
    for box in ((0.25, 0.375, 0.75, 0.5), (0.125, 0.25, 0.875, 0.5)):
        mesh = structured_square(8, fault=fault, box=box)
        ft = build_fault_topology(mesh, square_roles(mesh))
        model = build_elastic_model({r: {"lambda": 1.0, "mu": 1.0} for r in mesh.region_tags})
        results.append(solve_interface(mesh, model, ft, bump_slip(mesh, ft), clamped(mesh, body_loads(mesh))))
    a, b = results
    assert np.array_equal(a.split_mesh.nodes, b.split_mesh.nodes)
    assert relative_l2_difference(a.split_mesh, a.values, b.values) <= 1e-6


@given(st.sampled_from([8, 16]), st.floats(-1, 1), st.floats(-1, 1))
def test_interface_operator_symmetric_positive(n, a, b):
    mesh, _, ft, model = fault_square(n)
    op = InterfaceOperator(mesh, model, ft, clamped(mesh))
    rng = np.random.default_rng(n)
    phi, psi = rng.standard_normal((2, op.n_gamma))
    phi = phi + a * psi
    psi = psi + b * phi
    Aphi, Apsi = op.apply(phi), op.apply(psi)
    assert abs(psi @ Aphi - phi @ Apsi) <= 1e-9 * np.linalg.norm(phi) * np.linalg.norm(psi) * np.abs(Aphi).max()
    assert phi @ Aphi > 0.0


def test_neumann_variant_examples():
    mesh, _, ft, model = fault_square(8)
    zero = solve_neumann_variant(mesh, model, ft, SlipField.zero(ft))
    assert np.abs(zero.values).max() == 0.0
    slip = bump_slip(mesh, ft)
    only_slip = solve_neumann_variant(mesh, model, ft, slip)
    assert np.linalg.norm(only_slip.values - only_slip.info["slip_part"]) <= 1e-10 * np.linalg.norm(only_slip.values)
    assert np.abs(only_slip.info["load_part"]).max() == 0.0
    # self-equilibrated traction: equal and opposite on left and right edges
    loads = traction_contributions(mesh, {RIGHT: np.array([1.0, 0.0]), 4: np.array([-1.0, 0.0])})
    both = solve_neumann_variant(mesh, model, ft, slip, loads)
    total = both.info["slip_part"] + both.info["load_part"]
    assert np.linalg.norm(both.info["combined"] - total) <= 1e-9 * np.linalg.norm(total)
    assert both.info["superposition_error"] <= 1e-9


def test_verify_transmission_zero_slip():
    mesh, _, ft, model = fault_square(8)
    bc = clamped(mesh, body_loads(mesh))
    sol = solve_split_node(mesh, model, ft, SlipField.zero(ft), bc)
    r = sol.report
    scale = r.traction_scale
    assert r.jump_error == 0.0
    assert r.traction_jump_s <= 1e-10 * scale and r.traction_jump_gamma <= 1e-10 * scale
    assert r.interior_residual <= 1e-10 * r.load_norm


def test_verify_transmission_detects_corruption():
    mesh, _, ft, model = fault_square(8)
    slip = bump_slip(mesh, ft)
    sol = solve_split_node(mesh, model, ft, slip, clamped(mesh))
    clean = sol.report
    bad = sol.values.copy()
    mid = ft.s_interior_nodes[len(ft.s_interior_nodes) // 2]
    bad[mid] += np.abs(slip.values).max()
    corrupted = verify_transmission(sol, bad)
    assert clean.traction_jump_s <= 1e-8 * clean.traction_scale
    assert corrupted.traction_jump_s >= 0.1 * corrupted.traction_scale
    assert corrupted.jump_error > 0.5 * np.abs(slip.values).max()


def test_slip_on_tip_rejected():
    mesh, _, ft, model = fault_square(8)
    vals = np.zeros((len(ft.s_nodes), 2))
    vals[np.isin(ft.s_nodes, ft.s_boundary_nodes)] = 1.0
    with pytest.raises(InvariantError):
        solve_split_node(mesh, model, ft, SlipField(ft.s_nodes, vals), clamped(mesh))
