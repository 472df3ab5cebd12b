import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislox.errors import ConfigError, DomainError
from dislox.generate import structured_square
from dislox.material import (
    AffineField,
    build_elastic_model,
    check_admissibility,
    plane_strain_matrix,
    tensor_apply,
)


def test_constant_model():
    model = build_elastic_model({1: {"lambda": 1e9, "mu": 1e9}})
    assert model.regions == [1]
    assert model.lam[1] == AffineField(1e9, (0.0, 0.0))


def test_affine_lambda_gradient():
    model = build_elastic_model({1: {"lambda": [1e9, 0.0, 1e6], "mu": 1e9}})
    assert model.lam[1].b == (0.0, 1e6)
    assert model.lam[1]((0.0, 2.0)) == 1e9 + 2e6


def test_missing_region():
    mesh = structured_square(2, layers=(0.5,))
    with pytest.raises(ConfigError):
        build_elastic_model({1: {"lambda": 1.0, "mu": 1.0}}, regions=mesh.region_tags)


@pytest.mark.parametrize("bad", [math.nan, math.inf, "x", [1.0, 2.0]])
def test_non_finite_or_malformed(bad):
    with pytest.raises(ConfigError):
        build_elastic_model({1: {"lambda": bad, "mu": 1.0}})


def test_unknown_key_and_missing_mu():
    with pytest.raises(ConfigError):
        build_elastic_model({1: {"lambda": 1.0, "mu": 1.0, "nu": 0.3}})
    with pytest.raises(ConfigError):
        build_elastic_model({1: {"lambda": 1.0}})


def test_admissible_unit_model():
    mesh = structured_square(2)
    model = build_elastic_model({1: {"lambda": 1.0, "mu": 1.0}}, {"alpha0": 0.5, "beta0": 0.5, "M": 10.0})
    report = check_admissibility(model, mesh)
    assert report.passed
    assert report.entries[0].min_bulk == 5.0


def test_negative_mu_fails():
    mesh = structured_square(2)
    model = build_elastic_model({1: {"lambda": 1.0, "mu": [1.0, -2.0, 0.0]}}, {"alpha0": 0.1, "beta0": 0.0, "M": 10.0})
    report = check_admissibility(model, mesh)
    assert not report.passed
    # oracle: the affine field is extremal at a vertex of the square, x1 = 1
    assert report.entries[0].min_mu == -1.0
    assert "FAIL" in str(report)


def test_negative_lambda_allowed():
    mesh = structured_square(2)
    model = build_elastic_model({1: {"lambda": -0.4, "mu": 1.0}}, {"alpha0": 0.5, "beta0": 0.5, "M": 10.0})
    report = check_admissibility(model, mesh)
    assert report.passed
    assert report.entries[0].min_bulk == pytest.approx(0.8, abs=1e-15)


def test_lipschitz_bound_fails():
    mesh = structured_square(2)
    model = build_elastic_model({1: {"lambda": [1.0, 3.0, 4.0], "mu": 1.0}}, {"M": 9.0})
    # sup|lam| = 8 at (1, 1), |grad lam| = 5, sup|mu| = 1
    assert check_admissibility(model, mesh).entries[0].c01_norm == pytest.approx(14.0)
    assert not check_admissibility(model, mesh).passed


def unit_model(lam, mu):
    return build_elastic_model({1: {"lambda": lam, "mu": mu}})


def test_tensor_apply_examples():
    assert np.array_equal(tensor_apply(unit_model(1.0, 1.0), 1, (0, 0), np.zeros((2, 2))), np.zeros((2, 2)))
    assert np.allclose(tensor_apply(unit_model(2.0, 3.0), 1, (0, 0), np.eye(2)), 10 * np.eye(2))
    shear = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert np.allclose(tensor_apply(unit_model(0.0, 1.0), 1, (0, 0), shear), 2 * shear)


def test_tensor_apply_unknown_region():
    with pytest.raises(DomainError):
        tensor_apply(unit_model(1.0, 1.0), 7, (0, 0), np.eye(2))


def sym(a, b, c):
    return np.array([[a, b], [b, c]])


admissible = st.tuples(st.floats(0.1, 10.0), st.floats(-0.3, 10.0)).filter(lambda t: 3 * t[1] + 2 * t[0] > 0.05)
entries = st.floats(-1.0, 1.0)


@given(admissible, entries, entries, entries)
def test_quadratic_form_positivity(lm, a, b, c):
    mu, lam = lm
    alpha0, beta0 = mu, 3 * lam + 2 * mu
    A = sym(a, b, c)
    model = unit_model(lam, mu)
    q = np.sum(tensor_apply(model, 1, (0, 0), A) * A)
    assert q >= min(2 * alpha0, beta0 / 3) * np.sum(A * A) * (1 - 1e-12) - 1e-15


@given(admissible, entries, entries, entries, entries, entries, entries, st.floats(-2, 2))
def test_linearity_and_symmetry(lm, a, b, c, d, e, f, s):
    mu, lam = lm
    model = unit_model(lam, mu)
    e1, e2 = sym(a, b, c), sym(d, e, f)
    C1, C2 = tensor_apply(model, 1, (0, 0), e1), tensor_apply(model, 1, (0, 0), e2)
    assert np.allclose(tensor_apply(model, 1, (0, 0), e1 + s * e2), C1 + s * C2, atol=1e-12)
    lhs, rhs = np.sum(C1 * e2), np.sum(C2 * e1)
    assert abs(lhs - rhs) <= 1e-14 * max(1.0, abs(lhs), abs(rhs)) * 10


def test_major_minor_symmetry_exhaustive():
    model = unit_model(1.7, 0.9)
    C = np.zeros((2, 2, 2, 2))
    for k, l in itertools.product(range(2), repeat=2):
        E = np.zeros((2, 2))
        E[k, l] += 0.5
        E[l, k] += 0.5
        C[:, :, k, l] = tensor_apply(model, 1, (0, 0), E)
    for i, j, k, l in itertools.product(range(2), repeat=4):
        assert C[i, j, k, l] == pytest.approx(C[j, i, k, l])
        assert C[i, j, k, l] == pytest.approx(C[i, j, l, k])
        assert C[i, j, k, l] == pytest.approx(C[k, l, i, j])


def test_plane_strain_matrix_matches_tensor():
    lam, mu = 1.3, 0.7
    D = plane_strain_matrix(lam, mu)
    model = unit_model(lam, mu)
    for eps in (sym(1, 0, 0), sym(0, 0, 1), sym(0, 0.5, 0)):
        s = tensor_apply(model, 1, (0, 0), eps)
        v = D @ np.array([eps[0, 0], eps[1, 1], 2 * eps[0, 1]])
        assert np.allclose(v, [s[0, 0], s[1, 1], s[0, 1]])
