import os

import numpy as np
import pytest

from dislox.config import load_problem, parse_config, read_config
from dislox.errors import ConfigError
from dislox.generate import structured_square
from dislox.mesh import format_mesh

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

MINIMAL = """
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
"""


def test_minimal_forward():
    scn = parse_config(MINIMAL)
    assert scn.mode == "forward"
    assert scn.solver.method == "split" and scn.solver.cg_tol == 1e-10
    prob = load_problem(scn)
    assert prob.mesh.n_nodes == 81 and np.all(prob.slip.values == 0.0)


def test_misspelled_key_names_the_key():
    text = MINIMAL + "\n[solver]\ncg_toll = 1e-8\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert err.key == "cg_toll" and err.section == "solver"
    assert err.line == text.splitlines().index("cg_toll = 1e-8") + 1
    assert "cg_toll" in str(err)


def test_inverse_mode_needs_inverse_section():
    with pytest.raises(ConfigError, match=r"\[inverse\]"):
        parse_config(MINIMAL, mode="inverse")


def test_mode_resolution():
    assert parse_config(MINIMAL + "\n[output]\nmode = check\n").mode == "check"
    assert parse_config(MINIMAL, mode="check").mode == "check"
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, mode="party")


@pytest.mark.parametrize("extra, where", [
    ("\n[bogus]\nx = 1\n", None),
    ("\n[solver]\nmethod = fast\n", "method"),
    ("\n[solver]\ncg_tol = -1\n", "cg_tol"),
    ("\n[mesh]\nn = 4\n", None),
])
def test_invalid_values_and_sections(extra, where):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + extra)
    if where:
        assert info.value.key == where


def test_duplicate_key_reports_line():
    text = MINIMAL.replace("n = 8", "n = 8\nn = 16")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == text.splitlines().index("n = 16") + 1


def test_missing_files(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(MINIMAL + "\n[slip]\nfile = nope.csv\n", base_dir=str(tmp_path))
    text = MINIMAL.replace("generator = square", "file = nope.msh")
    with pytest.raises(ConfigError):
        parse_config(text, base_dir=str(tmp_path))
    with pytest.raises(ConfigError, match="cannot read"):
        read_config(str(tmp_path / "missing.cfg"))


def test_file_mesh_scenario(tmp_path):
    mesh = structured_square(8, fault=((0.25, 0.5), (0.75, 0.5)), box=(0.25, 0.375, 0.75, 0.5))
    (tmp_path / "square.msh").write_text(format_mesh(mesh))
    base = """
[mesh]
file = square.msh
[roles]
sigma_tags = [1]
free_tags = [2, 3, 4]
[fault]
fault_tags = [10]
omega_minus_regions = [11]
[material.1]
lambda = 1.0
mu = 1.0
[material.11]
lambda = 1.0
mu = 1.0
"""
    scn = parse_config(base, base_dir=str(tmp_path))
    prob = load_problem(scn)
    assert prob.mesh.n_nodes == mesh.n_nodes and len(prob.ft.s_nodes) == 5
    with pytest.raises(ConfigError, match="fault_tags"):
        parse_config(base.replace("fault_tags = [10]\n", ""), base_dir=str(tmp_path))


def test_slip_csv(tmp_path):
    scn = parse_config(MINIMAL)
    ft = load_problem(scn).ft
    mid = int(ft.s_interior_nodes[0])
    (tmp_path / "slip.csv").write_text(f"node_id,gx,gy\n{mid},0.5,-0.25\n")
    prob = load_problem(parse_config(MINIMAL + "\n[slip]\nfile = slip.csv\n", base_dir=str(tmp_path)))
    assert np.array_equal(prob.slip.at([mid])[0], [0.5, -0.25])
    tip = int(ft.s_boundary_nodes[0])
    (tmp_path / "tip.csv").write_text(f"node_id,gx,gy\n{tip},1,0\n")
    with pytest.raises(ConfigError):
        load_problem(parse_config(MINIMAL + "\n[slip]\nfile = tip.csv\n", base_dir=str(tmp_path)))
    (tmp_path / "far.csv").write_text("node_id,gx,gy\n0,1,0\n")
    with pytest.raises(ConfigError, match="not a fault node"):
        load_problem(parse_config(MINIMAL + "\n[slip]\nfile = far.csv\n", base_dir=str(tmp_path)))


def test_bump_must_vanish_at_tips():
    wide = '\n[slip]\nbump = {"center": [0.5, 0.5], "halfwidth": 0.4, "amplitude": 1.0, "direction": [1, 0]}\n'
    with pytest.raises(ConfigError, match="tips"):
        load_problem(parse_config(MINIMAL + wide))


def test_traction_on_clamped_edge_rejected():
    with pytest.raises(ConfigError, match="not free"):
        load_problem(parse_config(MINIMAL + '\n[loads]\ntraction = {"1": [0, 1]}\n'))


def test_manufactured_forbids_geometry():
    with pytest.raises(ConfigError):
        parse_config("[mesh]\nn = 8\nbox = [0, 0, 1, 1]\n[slip]\nmanufactured = smooth_jump\n")
    with pytest.raises(ConfigError, match="mms mode"):
        parse_config(MINIMAL, mode="mms")


@pytest.mark.parametrize("name", sorted(os.listdir(CONFIGS)))
def test_shipped_configs_parse(name):
    scn = read_config(os.path.join(CONFIGS, name))
    assert scn.sha256 and scn.mode in ("forward", "inverse", "mms")
    if scn.mode != "inverse":
        load_problem(scn)
