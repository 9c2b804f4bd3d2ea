"""Plain-text writers and readers for traces and field snapshots."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord
from .errors import InvalidParameterError

VTK_TRIANGLE = 5


def _g(v) -> str:
    return format(float(v), ".17g")


def write_trace(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(DiagnosticsRecord.FIELDS) + "\n")
        for rec in records:
            fh.write(",".join(_g(v) for v in rec.as_tuple()) + "\n")


def read_trace(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [DiagnosticsRecord(**{k: float(v) for k, v in row.items()}) for row in reader]


def write_snapshot(mesh, phi, path, fmt: str = "vtk") -> None:
    """Write nodal ``phi`` on ``mesh`` as legacy ASCII VTK or ``x,y,phi`` CSV."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (mesh.num_nodes,):
        raise InvalidParameterError("snapshot field does not match the mesh")
    if fmt == "vtk":
        _write_vtk(mesh, phi, path)
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write("x,y,phi\n")
            for (x, y), v in zip(mesh.nodes, phi):
                fh.write(f"{_g(x)},{_g(y)},{_g(v)}\n")
    else:
        raise InvalidParameterError(f"unknown snapshot format {fmt!r}")


def _write_vtk(mesh, phi, path):
    N, E = mesh.num_nodes, mesh.num_triangles
    lines = [
        "# vtk DataFile Version 3.0",
        f"phase field n={mesh.n}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {N} double",
    ]
    lines += [f"{_g(x)} {_g(y)} 0" for x, y in mesh.nodes]
    lines.append(f"CELLS {E} {4 * E}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {E}")
    lines += [str(VTK_TRIANGLE)] * E
    lines += [f"POINT_DATA {N}", "SCALARS phi double 1", "LOOKUP_TABLE default"]
    lines += [_g(v) for v in phi]
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot_csv(path):
    """Return ``(xy, phi)`` arrays from a CSV snapshot."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :2], data[:, 2]


def read_snapshot_vtk(path):
    """Minimal reader for files produced by :func:`write_snapshot`.

    Returns ``(points, cells, cell_types, phi)``.
    """
    tokens = Path(path).read_text().split("\n")
    it = iter(tokens)
    out = {}
    for line in it:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "POINTS":
            n = int(parts[1])
            out["points"] = np.array([[float(t) for t in next(it).split()] for _ in range(n)])
        elif parts[0] == "CELLS":
            n = int(parts[1])
            out["cells"] = np.array([[int(t) for t in next(it).split()] for _ in range(n)])
        elif parts[0] == "CELL_TYPES":
            n = int(parts[1])
            out["cell_types"] = np.array([int(next(it)) for _ in range(n)])
        elif parts[0] == "POINT_DATA":
            n = int(parts[1])
            next(it)  # SCALARS
            next(it)  # LOOKUP_TABLE
            out["phi"] = np.array([float(next(it)) for _ in range(n)])
    return out["points"], out["cells"], out["cell_types"], out["phi"]
