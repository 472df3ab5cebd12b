import csv
import json
import os
import shutil

import numpy as np
import pytest

from dislox.cli import run_command
from dislox.export import read_field_csv

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

FORWARD = """
[mesh]
generator = square
n = 8
fault = [[0.25, 0.5], [0.75, 0.5]]
box = [0.25, 0.375, 0.75, 0.5]

[material.1]
lambda = 1.0
mu = 1.0

[material.11]
lambda = 1.0
mu = 1.0

[admissibility]
alpha0 = 0.5
beta0 = 1.0
M = 10.0

[slip]
bump = {"center": [0.5, 0.5], "halfwidth": 0.25, "amplitude": 0.01, "direction": [1, 0]}

[loads]
body = [0.0, -1.0]

[output]
dir = out
"""


def write_cfg(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def snapshot(directory):
    return {n: open(os.path.join(directory, n), "rb").read() for n in sorted(os.listdir(directory))}


def test_forward_writes_outputs(tmp_path):
    assert run_command(["forward", write_cfg(tmp_path, FORWARD)]) == 0
    out = tmp_path / "out"
    assert {"displacement.csv", "displacement.vtk", "transmission.csv", "manifest.json"} <= set(os.listdir(out))
    ids, _, values = read_field_csv((out / "displacement.csv").read_text())
    assert len(ids) == 81 + 3 and np.abs(values).max() > 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "forward" and len(manifest["config_sha256"]) == 64
    assert set(manifest["outputs"]) == {"displacement.csv", "displacement.vtk", "transmission.csv"}
    assert {"numpy", "scipy", "dislox", "python"} <= set(manifest["versions"])


def test_forward_methods_agree(tmp_path):
    cfg = write_cfg(tmp_path, FORWARD)
    assert run_command(["forward", cfg, "--method", "split"]) == 0
    _, _, a = read_field_csv((tmp_path / "out" / "displacement.csv").read_text())
    assert run_command(["forward", cfg, "--method", "interface"]) == 0
    _, _, b = read_field_csv((tmp_path / "out" / "displacement.csv").read_text())
    assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)


def test_missing_config_exit_1(tmp_path, capsys):
    assert run_command(["forward", str(tmp_path / "missing.cfg")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_config_error_exit_1(tmp_path, capsys):
    assert run_command(["forward", write_cfg(tmp_path, FORWARD + "\n[solver]\ncg_toll = 1\n")]) == 1
    assert "cg_toll" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path):
    assert run_command([]) == 1
    assert run_command(["launch", "x.cfg"]) == 1
    assert run_command(["export", write_cfg(tmp_path, FORWARD)]) == 1
    assert run_command(["mms", write_cfg(tmp_path, FORWARD), "--levels", "0"]) == 1


def test_inadmissible_material_exit_1(tmp_path):
    text = FORWARD.replace("alpha0 = 0.5", "alpha0 = 5.0")
    assert run_command(["forward", write_cfg(tmp_path, text)]) == 1


def test_solver_error_exit_2(tmp_path, capsys):
    text = FORWARD + "\n[solver]\nlinear = cg\ncg_tol = 1e-30\ncg_maxiter_factor = 1\n"
    assert run_command(["forward", write_cfg(tmp_path, text)]) == 2
    assert "solver error" in capsys.readouterr().err


def test_export_formats(tmp_path):
    cfg = write_cfg(tmp_path, FORWARD)
    assert run_command(["export", cfg, "--format", "vtk"]) == 0
    text = (tmp_path / "out" / "displacement.vtk").read_text()
    assert "POINTS 84 double" in text and "VECTORS displacement double" in text


def test_mms_three_rows(tmp_path):
    text = "[mesh]\nn = 8\n[slip]\nmanufactured = smooth_jump\n[output]\ndir = out\n"
    assert run_command(["mms", write_cfg(tmp_path, text), "--levels", "3"]) == 0
    rows = read_csv(tmp_path / "out" / "convergence.csv")
    assert [int(r["n"]) for r in rows] == [8, 16, 32]
    assert rows[0]["l2_order"] == "nan" and float(rows[2]["l2_order"]) > 1.5


def test_check_forward_passes(tmp_path):
    assert run_command(["check", write_cfg(tmp_path, FORWARD)]) == 0
    rows = read_csv(tmp_path / "out" / "check.csv")
    names = {r["invariant"] for r in rows}
    assert {"zero_slip_collapse", "extension_difference"} <= names
    assert all(r["status"] in ("PASS", "SKIP") for r in rows)


def test_inverse_and_check(tmp_path):
    cfg = tmp_path / "inverse.cfg"
    shutil.copy(os.path.join(CONFIGS, "inverse_default.cfg"), cfg)
    text = cfg.read_text().replace("h = 0.04", "h = 0.08")
    cfg.write_text(text.replace("dir = out/inverse_default", "dir = out"))
    assert run_command(["inverse", str(cfg)]) == 0
    result = json.loads((tmp_path / "out" / "result.json").read_text())
    assert result["coeff_rel_error"] <= 1e-8
    assert run_command(["check", str(cfg)]) == 0


@pytest.mark.parametrize("command, cfg_text", [
    (["forward"], FORWARD),
    (["mms", "--levels", "2"], "[mesh]\nn = 8\n[slip]\nmanufactured = smooth_jump\n[output]\ndir = out\n"),
])
def test_bitwise_determinism(tmp_path, command, cfg_text):
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        cfg = write_cfg(d, cfg_text)
        assert run_command([command[0], cfg] + command[1:]) == 0
        runs.append(snapshot(d / "out"))
    assert runs[0] == runs[1]
