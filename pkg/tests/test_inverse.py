import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislox.errors import DimensionError, GeometryError, NonConvergence
from dislox.generate import FAULT
from dislox.inverse import (
    FaultParam,
    MeshingOptions,
    ReconstructOptions,
    SlipParam,
    SurfaceData,
    add_noise,
    default_fault,
    default_pair,
    default_setup,
    distinguishability_experiment,
    fd_gradient,
    forward_map,
    forward_operator,
    misfit,
    realize_fault,
    reconstruct,
    second_difference,
    slip_basis,
    tikhonov_solve,
)


@pytest.fixture(scope="module")
def setup():
    return default_setup(p=4, h=0.08, threads=1)


C = SlipParam((1.0, -0.5, 0.3, 0.2))


def test_horizontal_fault_heights():
    fp = default_fault(0.05)
    mesh, ft = realize_fault(fp, MeshingOptions(h=0.08))
    fn = np.unique(mesh.facets_with_tags([FAULT]))
    assert np.abs(fp.to_frame(mesh.nodes[fn])[:, 1] - 0.05).max() <= 1e-12


def test_realize_deterministic():
    fp = FaultParam(0.3, (-0.2, -0.05, 0.1, 0.2), (0.0, 0.03, -0.02, 0.01))
    a, _ = realize_fault(fp, MeshingOptions(h=0.08))
    b, _ = realize_fault(fp, MeshingOptions(h=0.08))
    assert a.nodes.tobytes() == b.nodes.tobytes() and a.elements.tobytes() == b.elements.tobytes()


def test_fault_length_matches_polyline():
    fp = FaultParam(0.2, (-0.2, -0.05, 0.1, 0.2), (0.0, 0.04, -0.03, 0.02))
    mesh, _ = realize_fault(fp, MeshingOptions(h=0.08))
    f = mesh.facets_with_tags([FAULT])
    total = np.hypot(*(mesh.nodes[f[:, 1]] - mesh.nodes[f[:, 0]]).T).sum()
    assert total == pytest.approx(fp.length, abs=1e-12)


def test_fault_outside_safety_box():
    with pytest.raises(GeometryError):
        realize_fault(default_fault(0.45), MeshingOptions(h=0.08))


def test_bad_parameters():
    with pytest.raises(GeometryError):
        FaultParam(0.0, (0.1, 0.0), (0.0, 0.0))
    with pytest.raises(DimensionError):
        FaultParam(0.0, (0.0, 0.1), (0.0,))
    with pytest.raises(DimensionError):
        SlipParam((1.0, 2.0, 3.0))


@given(st.floats(-math.pi, math.pi), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_frame_covariance(angle, h0, h1):
    fp = FaultParam(angle, (-0.2, 0.0, 0.2), (h0, h1, h0))
    # the same point set seen from the frame rotated by pi: knots and heights flip sign
    flipped = FaultParam(angle + math.pi, (-0.2, 0.0, 0.2), (-h0, -h1, -h0))
    assert np.abs(fp.points() - flipped.points()[::-1]).max() <= 1e-12
    assert np.abs(fp.from_frame(fp.to_frame(fp.points())) - fp.points()).max() <= 1e-12


def test_basis_vanishes_at_endpoints():
    for fp in (default_fault(0.05), FaultParam(0.4, (-0.2, 0.0, 0.2), (0.0, 0.05, -0.02))):
        mesh, ft = realize_fault(fp, MeshingOptions(h=0.08))
        basis = slip_basis(fp, mesh, ft, 8)
        tips = np.isin(ft.s_nodes, ft.s_boundary_nodes)
        assert tips.sum() == 2 and np.all(basis[:, tips] == 0.0)
        assert np.all(np.abs(basis[:, ~tips]).max(axis=(1, 2)) > 0)


def test_forward_zero_and_linear(setup):
    fp = default_fault()
    zero = forward_map(fp, SlipParam((0.0,) * 4), setup)
    assert np.all(zero.values == 0.0)
    f1 = forward_map(fp, C, setup).vector
    c2 = SlipParam((0.0, 1.0, -1.0, 0.5))
    f2 = forward_map(fp, c2, setup).vector
    f12 = forward_map(fp, SlipParam(tuple(np.add(C.coeffs, c2.coeffs))), setup).vector
    assert np.linalg.norm(f12 - f1 - f2) <= 1e-9 * (np.linalg.norm(f1) + np.linalg.norm(f2))
    f1x2 = forward_map(fp, SlipParam(tuple(2 * np.array(C.coeffs))), setup).vector
    assert np.linalg.norm(f1x2 - 2 * f1) <= 1e-9 * np.linalg.norm(f1)
    assert np.abs(f1x2).max() == pytest.approx(2 * np.abs(f1).max(), rel=1e-12)


def test_misfit_examples(setup):
    fp = default_fault()
    d = forward_map(fp, C, setup)
    assert misfit(fp, C, d, 0.0, setup) == 0.0
    zero = SurfaceData(setup.points, np.zeros_like(setup.points))
    flat = FaultParam(0.0, fp.knots, (0.0,) * 5)
    assert misfit(flat, SlipParam((0.0,) * 4), zero, 0.0, setup) == 0.0
    assert misfit(fp, C, zero, 1e-3, setup) > misfit(fp, C, zero, 0.0, setup)
    with pytest.raises(DimensionError):
        misfit(fp, C, SurfaceData(setup.points[:3], np.zeros((3, 2))), 0.0, setup)


def test_second_difference():
    assert np.array_equal(second_difference(3), [[1.0, -2.0, 1.0]])
    assert np.all(second_difference(5) @ np.linspace(0, 1, 5) == pytest.approx(0.0, abs=1e-15))


def test_fd_gradient_quadratic():
    g, fp, fm = fd_gradient(lambda p: float(p @ p), np.array([1.0, 2.0]), threads=1)
    assert np.allclose(g, [2.0, 4.0], atol=1e-8)
    assert fp.shape == fm.shape == (2,)


def test_fd_gradient_rejects_bad_step():
    with pytest.raises(ValueError):
        fd_gradient(lambda p: 0.0, np.zeros(2), step=0.0)


def test_fd_gradient_matches_normal_equations(setup):
    fp = default_fault()
    A = forward_operator(fp, setup)
    d = A @ np.array([0.5, 0.1, 0.0, -0.2]) + 1e-3
    alpha = 1e-4

    def J(c):
        return 0.5 * float(((A @ c - d) ** 2).sum()) + alpha * float(c @ c)

    c0 = np.array(C.coeffs)
    exact = A.T @ (A @ c0 - d) + 2 * alpha * c0
    g, _, _ = fd_gradient(J, c0, threads=2)
    assert np.linalg.norm(g - exact) <= 1e-6 * np.linalg.norm(exact)


def test_fd_gradient_richardson():
    f = lambda p: float(np.sin(p[0]) * np.exp(p[1]))
    p0 = np.array([0.3, 0.2])
    exact = np.array([np.cos(0.3) * np.exp(0.2), np.sin(0.3) * np.exp(0.2)])
    e1 = np.abs(fd_gradient(f, p0, step=1e-2, threads=1)[0] - exact).max()
    e2 = np.abs(fd_gradient(f, p0, step=5e-3, threads=1)[0] - exact).max()
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_forward_operator_matches_forward_map(setup):
    fp = default_fault()
    A = forward_operator(fp, setup)
    for k in range(setup.p):
        e = np.zeros(setup.p)
        e[k] = 1.0
        assert np.array_equal(forward_map(fp, SlipParam(tuple(e)), setup).vector, A[:, k])


def test_reconstruct_frozen_exact(setup):
    fp = default_fault()
    data = forward_map(fp, C, setup)
    rec = reconstruct(data, (fp, SlipParam((0.0,) * 4)), setup, ReconstructOptions(freeze_fault=True))
    assert rec.converged
    assert np.linalg.norm(rec.slip.array - C.array) <= 1e-8 * np.linalg.norm(C.array)


def test_reconstruct_from_truth(setup):
    fp = FaultParam(0.0, (-0.2, 0.0, 0.2), (0.05, 0.07, 0.05))
    data = forward_map(fp, C, setup)
    rec = reconstruct(data, (fp, C), setup)
    assert rec.converged and len(rec.trace) <= 3
    err = np.abs(np.r_[np.subtract(rec.fault.heights, fp.heights), rec.slip.array - C.array]).max()
    assert err <= 1e-8


def test_reconstruct_perturbed_heights(setup):
    # a shared reference mesh removes discretization mismatch, so the truth is the global minimizer
    setup = replace(setup, opts=replace(setup.opts, base=0.06))
    truth = FaultParam(0.0, (-0.2, 0.0, 0.2), (0.05, 0.07, 0.05))
    data = forward_map(truth, C, setup)
    start = truth.with_heights((0.06, 0.06, 0.06))
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonConvergence)
        rec = reconstruct(data, (start, SlipParam((0.0,) * 4)), setup, ReconstructOptions(max_iter=15, tol=1e-10))
    J = [row["J"] for row in rec.trace]
    assert all(b <= a for a, b in zip(J, J[1:]))
    assert np.abs(np.subtract(rec.fault.heights, truth.heights)).max() <= 1e-8
    assert np.linalg.norm(rec.slip.array - C.array) <= 1e-6 * np.linalg.norm(C.array)
    assert rec.trace_csv().splitlines()[0] == "iter,J,theta0,theta1,theta2,c0,c1,c2,c3"


def test_tikhonov_matches_normal_equations(rng):
    A = rng.standard_normal((20, 4))
    d = rng.standard_normal(20)
    c = tikhonov_solve(A, d, 0.3)
    assert np.allclose(c, np.linalg.solve(A.T @ A + 0.6 * np.eye(4), A.T @ d), rtol=1e-12)


def test_distinguishability(setup):
    same = distinguishability_experiment((default_fault(), C), (default_fault(), C), setup)
    assert same.gap <= 1e-8 and not same.distinguishable
    other = SlipParam((1.0, 0.5, 0.3, 0.2))
    gap = distinguishability_experiment((default_fault(), C), (default_fault(), other), setup)
    assert gap.gap > 0.0


def test_default_pair_separation():
    (f1, c1), (f2, c2) = default_pair()
    assert c1 == c2
    assert np.abs(f1.points()[:, 1] - f2.points()[:, 1]) == pytest.approx(0.1 * math.sqrt(2.0))


def test_surface_data_csv_and_noise(setup):
    d = SurfaceData(setup.points, np.arange(2 * len(setup.points), dtype=float).reshape(-1, 2) / 7)
    back = SurfaceData.from_csv(d.to_csv())
    assert np.array_equal(back.values, d.values) and np.array_equal(back.points, d.points)
    n1, n2 = add_noise(d, 1e-3, 5), add_noise(d, 1e-3, 5)
    assert np.array_equal(n1.values, n2.values) and not np.array_equal(n1.values, d.values)
    with pytest.raises(DimensionError):
        SurfaceData(setup.points, np.full(setup.points.shape, np.nan))


def test_reconstruct_nonconvergence_keeps_best(setup):
    setup = replace(setup, opts=replace(setup.opts, base=0.06))
    truth = FaultParam(0.0, (-0.2, 0.0, 0.2), (0.05, 0.07, 0.05))
    data = forward_map(truth, C, setup)
    start = truth.with_heights((0.06, 0.06, 0.06))
    with pytest.warns(NonConvergence):
        rec = reconstruct(data, (start, SlipParam((0.0,) * 4)), setup, ReconstructOptions(max_iter=1, tol=1e-12))
    assert not rec.converged and rec.trace[-1]["J"] < rec.trace[0]["J"]
    assert rec.fault.heights == tuple(rec.trace[-1]["theta"])


def test_alpha_sweep_error_curve(setup):
    fp = default_fault()
    A = forward_operator(fp, setup)
    data = add_noise(SurfaceData(setup.points, (A @ C.array).reshape(-1, 2)), 1e-5, 7)
    errs = [np.linalg.norm(tikhonov_solve(A, data.vector, a) - C.array) for a in (1e-10, 1e-8, 1e-6, 1e-4)]
    # large alpha over-regularizes; the curve must not be increasing then decreasing
    diffs = np.sign(np.diff(errs))
    assert not any(a > 0 and b < 0 for a, b in zip(diffs, diffs[1:]))
    assert errs[-1] > errs[0]
