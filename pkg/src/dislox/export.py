"""Field export (legacy VTK, CSV) and atomic file writes."""
from __future__ import annotations

import csv
import io
import os
import tempfile

import numpy as np

_VTK_TRIANGLE = 5


def atomic_write(path, text):
    """Write ``text`` to a temporary file in the target directory, then rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _g17(v):
    return format(float(v), ".17g")


def field_to_vtk(mesh, values, title="dislox displacement"):
    """Legacy ASCII VTK 3.0 unstructured grid with a ``displacement`` point vector field."""
    values = np.asarray(values, dtype=float).reshape(-1, 2)
    n, m = mesh.n_nodes, mesh.n_elements
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    out += [f"{_g17(x)} {_g17(y)} 0" for x, y in mesh.nodes.tolist()]
    out.append(f"CELLS {m} {4 * m}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.elements.tolist()]
    out.append(f"CELL_TYPES {m}")
    out += [str(_VTK_TRIANGLE)] * m
    out.append(f"CELL_DATA {m}")
    out.append("SCALARS region int 1")
    out.append("LOOKUP_TABLE default")
    out += [str(r) for r in mesh.regions.tolist()]
    out.append(f"POINT_DATA {n}")
    out.append("VECTORS displacement double")
    out += [f"{_g17(ux)} {_g17(uy)} 0" for ux, uy in values.tolist()]
    return "\n".join(out) + "\n"


def field_to_csv(mesh, values):
    """``node_id,x,y,ux,uy`` with 17 significant digits (round-trips float64 exactly)."""
    values = np.asarray(values, dtype=float).reshape(-1, 2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_id", "x", "y", "ux", "uy"])
    for i, ((x, y), (ux, uy)) in enumerate(zip(mesh.nodes.tolist(), values.tolist())):
        w.writerow([i, _g17(x), _g17(y), _g17(ux), _g17(uy)])
    return buf.getvalue()


def read_field_csv(text):
    """Inverse of ``field_to_csv``: returns ``(node_ids, coords (N, 2), values (N, 2))``."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["node_id", "x", "y", "ux", "uy"]:
        raise ValueError("expected header node_id,x,y,ux,uy")
    body = [r for r in rows[1:] if r]
    ids = np.array([int(r[0]) for r in body], dtype=np.int64)
    arr = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(-1, 4)
    return ids, arr[:, :2], arr[:, 2:]


def export_field(mesh, values, path, fmt):
    """Write a nodal field in ``fmt`` (``vtk`` or ``csv``) atomically; returns the path."""
    if fmt == "vtk":
        text = field_to_vtk(mesh, values)
    elif fmt == "csv":
        text = field_to_csv(mesh, values)
    else:
        raise ValueError(f"unknown export format '{fmt}'")
    return atomic_write(path, text)
