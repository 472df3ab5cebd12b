"""Scenario configuration: strict INI-like sections with JSON values.

Every section and key is checked against a schema; unknown keys are hard
errors that name the section, key and line. Values are JSON (numbers,
arrays, objects, strings, booleans); bare words are read as strings.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .dislocation import BoundaryConditions
from .errors import ConfigError, InvariantError
from .fem import SlipField, body_force_contributions, traction_contributions
from .generate import BOTTOM, square_roles, structured_square
from .manufactured import KINDS, manufactured_case
from .material import build_elastic_model
from .mesh import BoundaryRoles, build_fault_topology, parse_mesh, validate_roles

MODES = ("forward", "inverse", "mms", "check", "export")
METHODS = ("split", "interface")
FORMATS = ("vtk", "csv")


# -- value checkers ----------------------------------------------------------


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValueError("expected a finite number")
    return float(v)


def _positive(v):
    v = _number(v)
    if v <= 0:
        raise ValueError("expected a positive number")
    return v


def _nonnegative(v):
    v = _number(v)
    if v < 0:
        raise ValueError("expected a non-negative number")
    return v


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError("expected an integer")
    return v


def _pos_int(v):
    v = _int(v)
    if v <= 0:
        raise ValueError("expected a positive integer")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected true or false")
    return v


def _string(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _choice(options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return check


def _vector(n=None):
    def check(v):
        if not isinstance(v, list):
            raise ValueError("expected an array")
        out = tuple(_number(x) for x in v)
        if n is not None and len(out) != n:
            raise ValueError(f"expected {n} numbers")
        return out
    return check


def _tags(v):
    if isinstance(v, int) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list):
        raise ValueError("expected an integer or an array of integers")
    return tuple(_int(x) for x in v)


def _segment(v):
    if not isinstance(v, list) or len(v) != 2:
        raise ValueError("expected [[x0, y0], [x1, y1]]")
    return tuple(_vector(2)(p) for p in v)


def _formats(v):
    if isinstance(v, str):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ValueError("expected a format name or a non-empty array of them")
    return tuple(_choice(FORMATS)(x) for x in v)


def _bump(v):
    if not isinstance(v, dict):
        raise ValueError("expected an object {center, halfwidth, amplitude, direction}")
    keys = {"center", "halfwidth", "amplitude", "direction"}
    extra = set(v) - keys
    if extra:
        raise ValueError(f"unknown bump field '{sorted(extra)[0]}'")
    missing = keys - set(v)
    if missing:
        raise ValueError(f"bump needs '{sorted(missing)[0]}'")
    return {
        "center": _vector(2)(v["center"]),
        "halfwidth": _positive(v["halfwidth"]),
        "amplitude": _number(v["amplitude"]),
        "direction": _vector(2)(v["direction"]),
    }


def _tractions(v):
    if not isinstance(v, dict):
        raise ValueError('expected an object {"<facet tag>": [hx, hy]}')
    out = {}
    for k, h in v.items():
        if not re.fullmatch(r"[+-]?\d+", str(k)):
            raise ValueError(f"traction key {k!r} is not a facet tag")
        out[int(k)] = _vector(2)(h)
    return out


_SCHEMA = {
    "mesh": {
        "file": _string, "generator": _choice(("square",)), "n": _pos_int,
        "fault": _segment, "box": _vector(4), "layers": _vector(), "xi": _vector(2),
    },
    "roles": {"sigma_tags": _tags, "free_tags": _tags, "xi_tags": _tags},
    "fault": {"fault_tags": _tags, "omega_minus_regions": _tags},
    "admissibility": {"alpha0": _number, "beta0": _number, "M": _positive},
    "slip": {
        "file": _string, "bump": _bump, "manufactured": _choice(KINDS),
        "alternative_gamma": _bool,
    },
    "loads": {"body": _vector(2), "traction": _tractions},
    "solver": {
        "method": _choice(METHODS), "linear": _choice(("direct", "cg")),
        "cg_tol": _positive, "cg_maxiter_factor": _pos_int, "interface_tol": _positive,
    },
    "inverse": {
        "knots": _vector(), "frame_angle": _number, "heights": _vector(),
        "slip_modes": _pos_int, "coeffs": _vector(), "alpha": _nonnegative,
        "lm_lambda": _positive, "max_iter": _pos_int, "tol": _positive, "fd_step": _positive,
        "freeze_fault": _bool, "seed": _int, "noise_sigma": _nonnegative,
        "h": _positive, "thickness": _positive, "taper": _positive,
        "safety_box": _vector(4), "xi": _vector(2),
        "init_heights": _vector(), "init_coeffs": _vector(), "data": _string,
    },
    "output": {"dir": _string, "mode": _choice(MODES), "format": _formats},
}
_MATERIAL = {"lambda": None, "mu": None}


@dataclass(frozen=True)
class SolverOptions:
    method: str = "split"
    linear: str = "direct"
    cg_tol: float = 1e-10
    cg_maxiter_factor: int = 10
    interface_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated configuration; ``load_problem`` turns it into solver inputs."""

    mode: str
    mesh: dict
    roles: dict
    fault: dict
    materials: dict
    admissibility: dict
    slip: dict
    loads: dict
    solver: SolverOptions
    inverse: dict
    output: dict
    base_dir: str
    sha256: str
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def output_dir(self):
        return os.path.join(self.base_dir, self.output.get("dir", "out"))

    @property
    def formats(self):
        return self.output.get("format", FORMATS)

    @property
    def seed(self):
        return (self.inverse or {}).get("seed", 0)


def _line_index(text):
    """``{(section, key): line}`` and ``{section: line}`` for error messages."""
    keys, sections, section = {}, {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            sections.setdefault(section, no)
            continue
        m = re.match(r"([^=:\s][^=:]*?)\s*[=:]", s)
        if m and section is not None and not raw[:1].isspace() and s[0] not in "#;":
            keys.setdefault((section, m.group(1)), no)
    return keys, sections


def _value(raw):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if re.fullmatch(r"[A-Za-z_][\w./-]*", raw):
            return raw
        raise


def parse_config(text, mode=None, base_dir=None):
    """Parse and validate a scenario; ``mode`` overrides ``[output] mode``."""
    keys, sections = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="\x00")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", section=exc.section, key=exc.option, line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    data = {}
    materials = {}
    for section in parser.sections():
        where = sections.get(section)
        m = re.fullmatch(r"material\.([+-]?\d+)", section)
        schema = _MATERIAL if m else _SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"unknown section [{section}]", line=where)
        values = {}
        for key, raw in parser.items(section):
            line = keys.get((section, key), where)
            if key not in schema:
                raise ConfigError(f"unknown key '{key}'", section=section, key=key, line=line)
            try:
                v = _value(raw)
                values[key] = v if schema[key] is None else schema[key](v)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"invalid value {raw.strip()!r}: {exc}", section=section, key=key, line=line) from None
        if m:
            materials[int(m.group(1))] = values
        else:
            data[section] = values

    out = data.get("output", {})
    mode = mode or out.get("mode") or ("inverse" if "inverse" in data else "forward")
    if mode not in MODES:
        raise ConfigError(f"unknown mode '{mode}'")
    scn = Scenario(
        mode=mode,
        mesh=data.get("mesh", {}),
        roles=data.get("roles", {}),
        fault=data.get("fault", {}),
        materials=materials,
        admissibility=data.get("admissibility", {}),
        slip=data.get("slip", {}),
        loads=data.get("loads", {}),
        solver=SolverOptions(**data.get("solver", {})),
        inverse=data.get("inverse"),
        output=out,
        base_dir=os.path.abspath(base_dir or os.getcwd()),
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        lines={"sections": sections, "keys": keys},
    )
    _check_scenario(scn, sections)
    return scn


def _require(cond, message, section=None, key=None, sections=None):
    if not cond:
        line = (sections or {}).get(section) if section else None
        raise ConfigError(message, section=section, key=key, line=line)


def _check_scenario(scn, sections):
    mesh, slip = scn.mesh, scn.slip
    if scn.mode == "inverse":
        _require(scn.inverse is not None, "inverse mode needs an [inverse] section")
        inv = scn.inverse
        m = len(inv.get("knots", (0,) * 5))
        _require(m >= 2, "need at least two knots", "inverse", "knots", sections)
        for key in ("heights", "init_heights"):
            if key in inv:
                _require(len(inv[key]) == m, f"{key} needs {m} entries (one per knot)", "inverse", key, sections)
        p = inv.get("slip_modes", 8)
        _require(p % 2 == 0, "slip_modes must be even (tangent and normal modes)", "inverse", "slip_modes", sections)
        for key in ("coeffs", "init_coeffs"):
            if key in inv:
                _require(len(inv[key]) == p, f"{key} needs {p} entries", "inverse", key, sections)
        if "data" in inv:
            _require(os.path.isfile(os.path.join(scn.base_dir, inv["data"])),
                     f"data file '{inv['data']}' does not exist", "inverse", "data", sections)
        if scn.materials:
            _require(set(scn.materials) == {1, 11}, "inverse scenarios need exactly [material.1] and [material.11]")
        return

    _require("manufactured" in slip or bool(mesh), f"{scn.mode} mode needs a [mesh] section")
    sources = [k for k in ("file", "bump", "manufactured") if k in slip]
    _require(len(sources) <= 1, f"[slip] takes one of file, bump, manufactured, not {' and '.join(sources)}",
             "slip", None, sections)
    if scn.mode == "mms":
        _require("manufactured" in slip, "mms mode needs [slip] manufactured = <kind>", "slip", None, sections)
    if "alternative_gamma" in slip:
        _require("manufactured" in slip, "alternative_gamma applies to manufactured slip only",
                 "slip", "alternative_gamma", sections)
    if "manufactured" in slip:
        extra = set(mesh) - {"n", "generator"}
        _require(not extra, f"manufactured cases fix their own geometry; remove [mesh] {sorted(extra)[0] if extra else ''}",
                 "mesh", None, sections)
        _require(not scn.materials and not scn.loads and not scn.admissibility,
                 "manufactured cases fix their own materials, loads and admissibility bounds", "slip", None, sections)
        return

    has_file, has_gen = "file" in mesh, "generator" in mesh
    _require(has_file != has_gen, "[mesh] needs exactly one of file or generator", "mesh", None, sections)
    if has_file:
        _require(os.path.isfile(os.path.join(scn.base_dir, mesh["file"])),
                 f"mesh file '{mesh['file']}' does not exist", "mesh", "file", sections)
        gen_keys = set(mesh) & {"n", "fault", "box", "layers", "xi"}
        _require(not gen_keys, f"key '{sorted(gen_keys)[0] if gen_keys else ''}' applies to generated meshes only",
                 "mesh", None, sections)
        for key in ("sigma_tags", "free_tags"):
            _require(key in scn.roles, f"file meshes need [roles] {key}", "roles", key, sections)
        for key in ("fault_tags", "omega_minus_regions"):
            _require(key in scn.fault, f"file meshes need [fault] {key}", "fault", key, sections)
    else:
        for key in ("n", "fault", "box"):
            _require(key in mesh, f"generated meshes need '{key}'", "mesh", key, sections)
    if "file" in slip:
        _require(os.path.isfile(os.path.join(scn.base_dir, slip["file"])),
                 f"slip file '{slip['file']}' does not exist", "slip", "file", sections)
    _require(bool(scn.materials), "no [material.<region>] sections")


# -- problem construction ----------------------------------------------------


@dataclass(eq=False)
class Problem:
    """Mesh, roles, fault topology, model, slip and boundary data of a scenario."""

    mesh: object
    roles: BoundaryRoles
    ft: object
    model: object
    slip: SlipField
    bc: BoundaryConditions
    case: object = None


def _read(scn, rel):
    with open(os.path.join(scn.base_dir, rel), encoding="utf-8") as fh:
        return fh.read()


def _roles(scn, mesh):
    r, f = scn.roles, scn.fault
    if "file" in scn.mesh:
        roles = BoundaryRoles(r["sigma_tags"], r["free_tags"], r.get("xi_tags", ()),
                              f["fault_tags"], f["omega_minus_regions"])
    else:
        base = square_roles(mesh, sigma=r.get("sigma_tags", (BOTTOM,)))
        roles = BoundaryRoles(
            base.sigma_tags,
            r.get("free_tags", base.free_tags),
            r.get("xi_tags", base.xi_tags),
            f.get("fault_tags", base.fault_tags),
            f.get("omega_minus_regions", base.omega_minus_regions),
        )
    validate_roles(mesh, roles)
    return roles


def _slip_from_csv(text, ft):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["node_id", "gx", "gy"]:
        raise ConfigError("slip CSV needs the header node_id,gx,gy", section="slip", key="file")
    lookup = {int(v): k for k, v in enumerate(ft.s_nodes)}
    vals = np.zeros((len(ft.s_nodes), 2))
    for no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            node, gx, gy = int(row[0]), float(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise ConfigError(f"malformed slip row {row}", section="slip", key="file", line=no) from None
        if node not in lookup:
            raise ConfigError(f"node {node} is not a fault node", section="slip", key="file", line=no)
        vals[lookup[node]] = (gx, gy)
    return SlipField(ft.s_nodes, vals)


def bump_slip(bump, mesh, ft):
    """``amplitude (1 - r^2 / w^2)^2 direction`` for ``r < w``: a quartic bump vanishing at radius ``w``."""
    c = np.asarray(bump["center"])
    d = np.asarray(bump["direction"])

    def fn(x):
        r2 = ((x - c) ** 2).sum(axis=-1) / bump["halfwidth"] ** 2
        return bump["amplitude"] * np.clip(1.0 - r2, 0.0, None)[:, None] ** 2 * d[None, :]

    tips = mesh.nodes[ft.s_boundary_nodes]
    if len(tips) and np.any(fn(tips) != 0.0):
        raise ConfigError("bump does not vanish at the fault tips; reduce halfwidth or move center",
                          section="slip", key="bump")
    return SlipField.from_function(mesh, ft, fn)


def load_problem(scn):
    """Build the mesh, roles, fault topology, model, slip and loads of a forward scenario."""
    if "manufactured" in scn.slip:
        case = manufactured_case(scn.slip["manufactured"], scn.mesh.get("n", 16),
                                 scn.slip.get("alternative_gamma", False))
        return Problem(case.mesh, case.roles, case.ft, case.model, case.slip, case.bc, case)
    if "file" in scn.mesh:
        mesh = parse_mesh(_read(scn, scn.mesh["file"]))
    else:
        m = scn.mesh
        mesh = structured_square(m["n"], m["fault"], m["box"], m.get("layers", ()), m.get("xi"))
    roles = _roles(scn, mesh)
    ft = build_fault_topology(mesh, roles)
    model = build_elastic_model(scn.materials, scn.admissibility, mesh.region_tags)
    if "file" in scn.slip:
        slip = _slip_from_csv(_read(scn, scn.slip["file"]), ft)
    elif "bump" in scn.slip:
        slip = bump_slip(scn.slip["bump"], mesh, ft)
    else:
        slip = SlipField.zero(ft)
    try:
        slip.check(ft)
    except InvariantError as exc:
        raise ConfigError(str(exc), section="slip") from None
    loads = np.zeros((mesh.n_elements, 3, 2))
    if "body" in scn.loads:
        loads += body_force_contributions(mesh, np.asarray(scn.loads["body"]))
    if "traction" in scn.loads:
        bad = set(scn.loads["traction"]) - (roles.free_tags)
        if bad:
            raise ConfigError(f"traction on facet tag {sorted(bad)[0]}, which is not free", section="loads", key="traction")
        loads += traction_contributions(mesh, {t: np.asarray(h) for t, h in scn.loads["traction"].items()})
    return Problem(mesh, roles, ft, model, slip, BoundaryConditions(frozenset(roles.sigma_tags), loads))


def read_config(path, mode=None):
    """Parse a config file; its directory anchors relative paths."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc.strerror}") from None
    return parse_config(text, mode=mode, base_dir=os.path.dirname(os.path.abspath(path)))


__all__ = ["Problem", "Scenario", "SolverOptions", "bump_slip", "load_problem", "parse_config", "read_config"]
