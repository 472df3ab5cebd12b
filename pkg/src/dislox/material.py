"""Piecewise isotropic elasticity with affine Lame fields per region."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class AffineField:
    """Scalar field ``a + b . x``."""

    a: float
    b: tuple = (0.0, 0.0)

    @classmethod
    def parse(cls, value, where=""):
        if np.isscalar(value):
            coeffs = [value, 0.0, 0.0]
        else:
            coeffs = list(value)
            if len(coeffs) == 1:
                coeffs += [0.0, 0.0]
        if len(coeffs) != 3:
            raise ConfigError(f"{where}affine field needs [a, b1, b2], got {value!r}")
        try:
            coeffs = [float(c) for c in coeffs]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}non-numeric coefficient in {value!r}") from None
        if not all(math.isfinite(c) for c in coeffs):
            raise ConfigError(f"{where}non-finite coefficient in {value!r}")
        return cls(coeffs[0], (coeffs[1], coeffs[2]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.a + x[..., 0] * self.b[0] + x[..., 1] * self.b[1]

    @property
    def gradient_norm(self):
        return math.hypot(*self.b)


@dataclass(frozen=True)
class ElasticModel:
    lam: dict
    mu: dict
    alpha0: float = 0.0
    beta0: float = 0.0
    M: float = math.inf

    @property
    def regions(self):
        return sorted(self.lam)

    def _fields(self, region):
        try:
            return self.lam[region], self.mu[region]
        except KeyError:
            raise DomainError(f"unknown region {region}") from None

    def coefficients(self, regions, points):
        """Lame parameters at ``points`` for elements of the given ``regions``."""
        regions = np.asarray(regions)
        lam = np.empty(len(regions))
        mu = np.empty(len(regions))
        for r in np.unique(regions):
            sel = regions == r
            lf, mf = self._fields(int(r))
            lam[sel] = lf(points[sel])
            mu[sel] = mf(points[sel])
        return lam, mu

    def element_coefficients(self, mesh):
        """Lame parameters at element centroids (exact one-point rule for affine fields)."""
        return self.coefficients(mesh.regions, mesh.centroids)


def build_elastic_model(materials, admissibility=None, regions=None):
    """Build a model from ``{region: {"lambda": ..., "mu": ...}}``.

    Coefficients are scalars or ``[a, b1, b2]`` lists. ``regions`` lists the
    region tags the model must cover (typically ``mesh.region_tags``).
    """
    lam, mu = {}, {}
    for tag, entry in materials.items():
        tag = int(tag)
        for key in entry:
            if key not in ("lambda", "mu"):
                raise ConfigError(f"unknown key '{key}'", section=f"material.{tag}")
        for key in ("lambda", "mu"):
            if key not in entry:
                raise ConfigError("missing coefficient", section=f"material.{tag}", key=key)
        lam[tag] = AffineField.parse(entry["lambda"], f"[material.{tag}] lambda: ")
        mu[tag] = AffineField.parse(entry["mu"], f"[material.{tag}] mu: ")
    if regions is not None:
        missing = sorted(set(int(r) for r in regions) - set(lam))
        if missing:
            raise ConfigError(f"no material for region(s) {missing}")
    adm = dict(admissibility or {})
    values = {}
    for key, default in (("alpha0", 0.0), ("beta0", 0.0), ("M", math.inf)):
        v = float(adm.pop(key, default))
        if math.isnan(v):
            raise ConfigError("non-finite value", section="admissibility", key=key)
        values[key] = v
    if adm:
        raise ConfigError(f"unknown key '{next(iter(adm))}'", section="admissibility")
    return ElasticModel(lam, mu, **values)


@dataclass(frozen=True)
class RegionAdmissibility:
    region: int
    min_mu: float
    min_bulk: float
    c01_norm: float
    passed: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    entries: tuple

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def __str__(self):
        rows = [
            f"region {e.region}: min mu={e.min_mu:.6g} min(3lam+2mu)={e.min_bulk:.6g} "
            f"C01={e.c01_norm:.6g} {'pass' if e.passed else 'FAIL'}"
            for e in self.entries
        ]
        return "\n".join(rows)


def check_admissibility(model, mesh):
    """Extremize the affine Lame fields over region nodes and compare with the bounds.

    The Lipschitz bound uses the sum of both fields' ``sup|f| + |grad f|`` per region.
    """
    entries = []
    for region in mesh.region_tags:
        lf, mf = model._fields(region)
        pts = mesh.nodes[np.unique(mesh.elements[mesh.regions == region])]
        lam, mu = lf(pts), mf(pts)
        min_mu = float(mu.min())
        min_bulk = float((3 * lam + 2 * mu).min())
        norm = (
            float(np.abs(lam).max()) + lf.gradient_norm
            + float(np.abs(mu).max()) + mf.gradient_norm
        )
        ok = min_mu >= model.alpha0 and min_bulk >= model.beta0 and norm <= model.M
        entries.append(RegionAdmissibility(region, min_mu, min_bulk, norm, ok))
    return AdmissibilityReport(tuple(entries))


def tensor_apply(model, region, x, strain):
    """Stress ``lam tr(e) I + 2 mu e`` for a symmetric 2x2 strain at point ``x``."""
    lf, mf = model._fields(region)
    strain = np.asarray(strain, dtype=float)
    lam, mu = float(lf(x)), float(mf(x))
    return lam * np.trace(strain) * np.eye(2) + 2.0 * mu * strain


def plane_strain_matrix(lam, mu):
    """Voigt matrix acting on ``(exx, eyy, 2 exy)``."""
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


def voigt_stress(lam, mu, strain):
    """Vectorized Voigt stress ``(sxx, syy, sxy)`` from Voigt strain ``(exx, eyy, gxy)``."""
    tr = strain[..., 0] + strain[..., 1]
    return np.stack(
        [lam * tr + 2 * mu * strain[..., 0], lam * tr + 2 * mu * strain[..., 1], mu * strain[..., 2]],
        axis=-1,
    )
