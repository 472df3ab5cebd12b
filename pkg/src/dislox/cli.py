"""Command-line surface: ``forward``, ``inverse``, ``mms``, ``check`` and ``export``.

Exit codes: 0 success, 1 configuration or validation error, 2 solver error.
Every command writes a ``manifest.json`` next to its outputs with the config
hash, seed, tolerances, package versions and output checksums (no timestamps,
so identical runs give identical manifests).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import traceback
import warnings
from dataclasses import replace

import numpy as np
import scipy

from . import __version__, inverse
from .config import load_problem, read_config
from .dislocation import (
    InterfaceOperator,
    interface_matrix,
    relative_l2_difference,
    solve_continuous,
    solve_interface,
    solve_split_node,
)
from .errors import (
    AssemblyError,
    ConfigError,
    DimensionError,
    DisloxError,
    DomainError,
    GeometryError,
    InvariantError,
    MeshSyntaxError,
    NonConvergence,
    SolveError,
    TopologyError,
)
from .export import atomic_write, field_to_csv, field_to_vtk
from .fem import SlipField
from .kernels import BACKEND
from .manufactured import convergence_study, manufactured_case
from .material import build_elastic_model, check_admissibility
from .mesh import split_parent

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2
_VALIDATION = (ConfigError, MeshSyntaxError, TopologyError, GeometryError, DomainError, DimensionError)
_SOLVER = (SolveError, AssemblyError, InvariantError)


class CheckFailed(DisloxError):
    """An invariant of the ``check`` suite did not hold."""


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


class _Outputs:
    """Collects written files and their checksums for the manifest."""

    def __init__(self, directory):
        self.directory = directory
        self.files = {}

    def write(self, name, text):
        atomic_write(os.path.join(self.directory, name), text)
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def manifest(self, command, scn, extra=None):
        s = scn.solver
        doc = {
            "command": command,
            "mode": scn.mode,
            "config_sha256": scn.sha256,
            "seed": scn.seed,
            "tolerances": {
                "method": s.method, "linear": s.linear, "cg_tol": s.cg_tol,
                "cg_maxiter_factor": s.cg_maxiter_factor, "interface_tol": s.interface_tol,
            },
            "versions": {
                "dislox": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "backend": BACKEND,
            "outputs": dict(sorted(self.files.items())),
        }
        if extra:
            doc.update(extra)
        atomic_write(os.path.join(self.directory, "manifest.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _admissible(problem):
    report = check_admissibility(problem.model, problem.mesh)
    if not report.passed:
        raise ConfigError(f"material is not admissible:\n{report}", section="admissibility")
    return report


def _forward_solution(scn, method=None):
    problem = load_problem(scn)
    _admissible(problem)
    s = scn.solver
    method = method or s.method
    if method == "split":
        sol = solve_split_node(problem.mesh, problem.model, problem.ft, problem.slip, problem.bc,
                               method=s.linear, tol=s.cg_tol, maxiter_factor=s.cg_maxiter_factor)
    else:
        sol = solve_interface(problem.mesh, problem.model, problem.ft, problem.slip, problem.bc, tol=s.interface_tol)
    return problem, sol


def _report_rows(sol):
    return [(k, float(v)) for k, v in sol.report.rows()]


def cmd_forward(scn, args):
    problem, sol = _forward_solution(scn, args.method)
    out = _Outputs(scn.output_dir)
    if "csv" in scn.formats:
        out.write("displacement.csv", field_to_csv(sol.split_mesh, sol.values))
    if "vtk" in scn.formats:
        out.write("displacement.vtk", field_to_vtk(sol.split_mesh, sol.values))
    out.write("transmission.csv", _csv(["quantity", "value"], _report_rows(sol)))
    extra = {"method": sol.method, "iterations": int(sol.info.get("iterations", 0))}
    out.manifest("forward", scn, extra)
    print(f"forward ({sol.method}): {sol.split_mesh.n_nodes} nodes, max |u| = {np.abs(sol.values).max():.6e}")
    for k, v in _report_rows(sol):
        print(f"  {k:24s} {v:.3e}")
    return EXIT_OK


def cmd_export(scn, args):
    problem, sol = _forward_solution(scn)
    out = _Outputs(scn.output_dir)
    name = f"displacement.{args.format}"
    text = field_to_vtk(sol.split_mesh, sol.values) if args.format == "vtk" else field_to_csv(sol.split_mesh, sol.values)
    out.write(name, text)
    out.manifest("export", scn, {"format": args.format})
    print(f"wrote {os.path.join(scn.output_dir, name)}")
    return EXIT_OK


_MMS_COLUMNS = ("method", "n", "h", "l2", "h1", "l2_order", "h1_order", "flux_jump_gamma",
                "traction_jump_gamma", "jump_error", "iterations")


def cmd_mms(scn, args):
    n0 = scn.mesh.get("n", 16)
    levels = tuple(n0 * 2 ** k for k in range(args.levels))
    method = args.method or scn.solver.method
    rows = convergence_study(scn.slip["manufactured"], levels, methods=(method,))
    out = _Outputs(scn.output_dir)
    out.write("convergence.csv", _csv(_MMS_COLUMNS, [[r[c] for c in _MMS_COLUMNS] for r in rows]))
    out.manifest("mms", scn, {"levels": list(levels)})
    print(f"{'n':>5s} {'L2':>12s} {'H1':>12s} {'L2 order':>9s} {'H1 order':>9s}")
    for r in rows:
        print(f"{r['n']:5d} {r['l2']:12.4e} {r['h1']:12.4e} {r['l2_order']:9.3f} {r['h1_order']:9.3f}")
    return EXIT_OK


def _inverse_setup(scn):
    inv = scn.inverse
    p = inv.get("slip_modes", 8)
    knots = inv.get("knots", tuple(np.linspace(-0.2, 0.2, 5).tolist()))
    m = len(knots)
    heights = inv.get("heights", (0.05,) * m)
    model = (build_elastic_model(scn.materials, scn.admissibility) if scn.materials else inverse.default_model())
    base = inverse.MeshingOptions()
    opts = inverse.MeshingOptions(
        h=inv.get("h", 0.04),
        thickness=inv.get("thickness", base.thickness),
        taper=inv.get("taper", base.taper),
        safety_box=inv.get("safety_box", base.safety_box),
        xi=inv.get("xi", base.xi),
        base=float(np.mean(heights)),
    )
    truth = inverse.FaultParam(inv.get("frame_angle", 0.0), knots, heights)
    mesh, _ = inverse.realize_fault(truth, opts)
    setup = inverse.InverseSetup(model, opts, p, inverse.xi_sampling(mesh), threads=_threads())
    default_c = (1.0, 0.5, 0.0, 0.0, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0) * (p // 10 + 1)
    coeffs = inverse.SlipParam(inv.get("coeffs", default_c[:p]))
    return setup, truth, coeffs


def _threads():
    v = os.environ.get("DISLOX_THREADS")
    if v is None:
        return None
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"DISLOX_THREADS must be a positive integer, got {v!r}") from None
    if n <= 0:
        raise ConfigError(f"DISLOX_THREADS must be a positive integer, got {v!r}")
    return n


def cmd_inverse(scn, args):
    inv = scn.inverse
    setup, truth, coeffs = _inverse_setup(scn)
    if "data" in inv:
        with open(os.path.join(scn.base_dir, inv["data"]), encoding="utf-8") as fh:
            data = inverse.SurfaceData.from_csv(fh.read())
        if data.points.shape != setup.points.shape or not np.allclose(data.points, setup.points, atol=1e-9):
            raise DimensionError("data points do not match the sample set of this scenario")
    else:
        data = inverse.forward_map(truth, coeffs, setup)
    sigma = inv.get("noise_sigma", 0.0)
    if sigma > 0:
        data = inverse.add_noise(data, sigma, scn.seed)
    init = (
        truth.with_heights(inv.get("init_heights", truth.heights)),
        inverse.SlipParam(inv.get("init_coeffs", (0.0,) * setup.p)),
    )
    options = inverse.ReconstructOptions(
        alpha=inv.get("alpha", 0.0),
        max_iter=inv.get("max_iter", 20),
        tol=inv.get("tol", 1e-6),
        lm_lambda=inv.get("lm_lambda", 1e-2),
        fd_step=inv.get("fd_step", 1e-6),
        freeze_fault=inv.get("freeze_fault", False),
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergence)
        rec = inverse.reconstruct(data, init, setup, options)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _Outputs(scn.output_dir)
    out.write("data.csv", data.to_csv())
    out.write("trace.csv", rec.trace_csv())
    result = {
        "converged": bool(rec.converged),
        "iterations": len(rec.trace) - 1,
        "J": float(rec.trace[-1]["J"]),
        "heights": [float(v) for v in rec.fault.heights],
        "coeffs": [float(v) for v in rec.slip.coeffs],
        "rejected_steps": len(rec.rejected),
    }
    if "data" not in inv:
        c_true = coeffs.array
        result["coeff_rel_error"] = float(np.linalg.norm(rec.slip.array - c_true) / max(np.linalg.norm(c_true), 1e-300))
        result["height_error"] = float(np.abs(np.asarray(rec.fault.heights) - np.asarray(truth.heights)).max())
    out.write("result.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    out.manifest("inverse", scn, {"noise_sigma": sigma})
    print(f"inverse: {'converged' if rec.converged else 'NOT converged'} after {result['iterations']} iteration(s), "
          f"J = {result['J']:.6e}")
    if "coeff_rel_error" in result:
        print(f"  slip coefficient relative error {result['coeff_rel_error']:.3e}")
    return EXIT_OK


def _alternative_problem(scn, problem):
    """The same fault and slip with a second, larger Omega_minus, or None if not constructible."""
    if problem.case is not None:
        case = manufactured_case(scn.slip["manufactured"], scn.mesh.get("n", 16), not scn.slip.get("alternative_gamma", False))
        return case.mesh, case.ft, case.model, case.slip, case.bc
    if "generator" not in scn.mesh or scn.fault.get("omega_minus_regions"):
        return None
    m = scn.mesh
    n, (x0, y0, x1, y1) = m["n"], m["box"]
    h = 1.0 / n
    (fx0, fy0), (fx1, fy1) = m["fault"]
    # grow every side of the box except the ones carrying the fault
    keep = [fx0 == fx1 == x0, fy0 == fy1 == y0, fx0 == fx1 == x1, fy0 == fy1 == y1]
    grown = (max(x0 - h, h), max(y0 - h, h), min(x1 + h, 1 - h), min(y1 + h, 1 - h))
    box = tuple(old if k else new for old, new, k in zip((x0, y0, x1, y1), grown, keep))
    if box == (x0, y0, x1, y1):
        return None
    alt = load_problem(replace(scn, mesh={**m, "box": list(box)}))
    return alt.mesh, alt.ft, alt.model, alt.slip, alt.bc


def cmd_check(scn, args):
    """Invariant suite: interface operator SPD, extension independence, zero-slip collapse."""
    if scn.mode == "inverse":
        setup, truth, coeffs = _inverse_setup(scn)
        mesh, ft = inverse.realize_fault(truth, setup.opts)
        basis = inverse.slip_basis(truth, mesh, ft, setup.p)
        tips = np.abs(basis.reshape(setup.p, -1, 2)[:, np.isin(ft.s_nodes, ft.s_boundary_nodes)]).max(initial=0.0)
        rows = [("slip_basis_tip_max", tips, 0.0)]
        F1 = inverse.forward_map(truth, coeffs, setup).vector
        F2 = inverse.forward_map(truth, inverse.SlipParam(tuple(2 * coeffs.array)), setup).vector
        rows.append(("linearity_defect", float(np.linalg.norm(F2 - 2 * F1) / max(np.linalg.norm(F1), 1e-300)), 1e-9))
        return _check_rows(scn, rows)

    problem = load_problem(scn)
    adm = check_admissibility(problem.model, problem.mesh)
    print(adm)
    rows = [("admissibility", 0.0 if adm.passed else 1.0, 0.0)]
    mesh, model, ft, bc = problem.mesh, problem.model, problem.ft, problem.bc

    op = InterfaceOperator(mesh, model, ft, bc)
    A = interface_matrix(op)
    rows.append(("interface_symmetry_defect", float(np.abs(A - A.T).max() / np.abs(A).max()), 1e-9))
    lam_min = float(np.linalg.eigvalsh((A + A.T) / 2)[0])
    rows.append(("interface_min_eig_negated", -lam_min, -np.finfo(float).tiny))

    a = solve_interface(mesh, model, ft, problem.slip, bc, tol=scn.solver.interface_tol, op=op)
    b = solve_split_node(mesh, model, ft, problem.slip, bc)
    rows.append(("method_difference", relative_l2_difference(a.split_mesh, a.values, b.values), 1e-6))
    rows.append(("interface_iterations_over_2n", a.info["iterations"] / (2.0 * op.n_gamma), 1.0))

    alt = _alternative_problem(scn, problem)
    if alt is None:
        print("extension independence: skipped (no alternative extension for this mesh)")
    else:
        mesh2, ft2, model2, slip2, bc2 = alt
        c = solve_interface(mesh2, model2, ft2, slip2, bc2, tol=scn.solver.interface_tol)
        if c.split_mesh.n_nodes != a.split_mesh.n_nodes or not np.array_equal(c.split_mesh.nodes, a.split_mesh.nodes):
            raise CheckFailed("alternative extension changed the split mesh")
        rows.append(("extension_difference", relative_l2_difference(a.split_mesh, a.values, c.values), 1e-6))

    zero = SlipField.zero(ft)
    z = solve_split_node(mesh, model, ft, zero, bc)
    u_c = solve_continuous(mesh, model, bc)
    # every copy must coincide with its parent once the jump vanishes
    parent = split_parent(mesh.n_nodes, ft)
    scale = max(np.abs(u_c).max(), 1.0)
    rows.append(("zero_slip_collapse", float(np.abs(z.values - u_c[parent]).max() / scale), 1e-12))
    return _check_rows(scn, rows)


def _check_rows(scn, rows):
    out = _Outputs(scn.output_dir)
    out.write("check.csv", _csv(["invariant", "value", "limit", "status"],
                                [(k, float(v), float(t), "PASS" if v <= t else "FAIL") for k, v, t in rows]))
    out.manifest("check", scn)
    failed = [k for k, v, t in rows if not v <= t]
    for k, v, t in rows:
        print(f"{'PASS' if v <= t else 'FAIL'} {k}: {v:.3e} (limit {t:.1e})")
    if failed:
        raise CheckFailed(f"invariants failed: {', '.join(failed)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dislox", description="Elastostatic dislocation solvers and fault inversion.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("forward", help="solve the forward problem and write the displacement")
    p.add_argument("config")
    p.add_argument("--method", choices=("interface", "split"))
    p = sub.add_parser("inverse", help="reconstruct fault heights and slip from surface data")
    p.add_argument("config")
    p = sub.add_parser("mms", help="manufactured-solution convergence table")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--method", choices=("interface", "split"))
    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("config")
    p = sub.add_parser("export", help="solve and export the displacement field")
    p.add_argument("config")
    p.add_argument("--format", choices=("vtk", "csv"), required=True)
    return parser


_COMMANDS = {"forward": cmd_forward, "inverse": cmd_inverse, "mms": cmd_mms, "check": cmd_check, "export": cmd_export}


def run_command(argv):
    """Run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "mms" and args.levels < 1:
        print("error: --levels must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    mode = {"export": None, "check": None}.get(args.command, args.command)
    try:
        scn = read_config(args.config, mode=mode)
        if args.command == "export" and scn.mode == "inverse":
            raise ConfigError("export needs a forward scenario")
        return _COMMANDS[args.command](scn, args)
    except _VALIDATION as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (*_SOLVER, CheckFailed) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:  # noqa: BLE001 - report, never hide, unexpected failures
        traceback.print_exc()
        print("internal error (see traceback above)", file=sys.stderr)
        return EXIT_SOLVER


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
