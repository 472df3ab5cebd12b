import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dislox.generate import BOTTOM, square_roles, structured_square
from dislox.material import build_elastic_model
from dislox.mesh import build_fault_topology

settings.register_profile(
    "dislox", deadline=None, max_examples=int(os.environ.get("DISLOX_HYPOTHESIS_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("dislox")

UNIT = {"lambda": 1.0, "mu": 1.0}


def fault_square(n=8, fault=((0.25, 0.5), (0.75, 0.5)), box=(0.25, 0.375, 0.75, 0.5), layers=(), sigma=(BOTTOM,)):
    """Structured square with a fault, its topology and a homogeneous model."""
    mesh = structured_square(n, fault=fault, box=box, layers=layers)
    roles = square_roles(mesh, sigma=sigma)
    ft = build_fault_topology(mesh, roles)
    model = build_elastic_model({r: UNIT for r in mesh.region_tags}, {"alpha0": 0.5, "beta0": 1.0, "M": 10.0})
    return mesh, roles, ft, model


@pytest.fixture
def square8():
    return fault_square(8)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
