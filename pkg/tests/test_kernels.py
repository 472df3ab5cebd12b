import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislox import _kernels_py, kernels
from dislox.generate import structured_square

cy = pytest.importorskip("dislox._ckernels")


def random_mesh(seed, n=6):
    rng = np.random.default_rng(seed)
    mesh = structured_square(n)
    coords = mesh.nodes + 0.2 / n * rng.uniform(-1, 1, mesh.nodes.shape)
    lam = rng.uniform(0.5, 5.0, mesh.n_elements)
    mu = rng.uniform(0.5, 5.0, mesh.n_elements)
    return coords, mesh.elements, lam, mu, rng


@given(st.integers(0, 2 ** 32 - 1))
def test_stiffness_backends_agree(seed):
    coords, tris, lam, mu, _ = random_mesh(seed)
    a = _kernels_py.element_stiffness(coords, tris, lam, mu)
    b = cy.element_stiffness(coords, tris, np.ascontiguousarray(lam), np.ascontiguousarray(mu))
    assert np.abs(np.asarray(b) - a).max() <= 1e-12 * np.abs(a).max()


@given(st.integers(0, 2 ** 32 - 1))
def test_strain_backends_agree(seed):
    coords, tris, _, _, rng = random_mesh(seed)
    u = rng.standard_normal((len(coords), 2))
    a = _kernels_py.element_strain(coords, tris, u)
    b = cy.element_strain(coords, tris, u)
    assert np.abs(np.asarray(b) - a).max() <= 1e-12 * np.abs(a).max()


def test_dispatch_uses_compiled_backend():
    assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, DISLOX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from dislox.kernels import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
