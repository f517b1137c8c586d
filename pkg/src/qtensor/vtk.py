"""Legacy ASCII VTK output of nodal Q fields."""

from __future__ import annotations

import os

import numpy as np

from .diagnostics import defect_field
from .mesh import Mesh

CELL_TYPES = {2: 5, 3: 10}  # triangle, tetrahedron


def _fmt(x) -> str:
    return f"{x:.9g}"


def write_vtk(mesh: Mesh, Q: np.ndarray, path, title: str = "qtensor") -> None:
    """Write nodes, cells and the fields q, lambda_gap, director."""
    path = os.fspath(path)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    Q = np.asarray(getattr(Q, "values", Q), dtype=float)
    gap, director = defect_field(Q)
    n = mesh.n_nodes
    pts = np.zeros((n, 3))
    pts[:, : mesh.dim] = mesh.nodes
    nl = mesh.dim + 1
    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {n} double")
    lines += [" ".join(map(_fmt, p)) for p in pts]
    lines.append(f"CELLS {mesh.n_elements} {mesh.n_elements * (nl + 1)}")
    lines += [f"{nl} " + " ".join(map(str, c)) for c in mesh.elements]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += [str(CELL_TYPES[mesh.dim])] * mesh.n_elements
    lines.append(f"POINT_DATA {n}")
    lines.append("TENSORS q double")
    for t in Q:
        lines += [" ".join(map(_fmt, row)) for row in t]
    lines.append("SCALARS lambda_gap double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [_fmt(g) for g in gap]
    lines.append("VECTORS director double")
    lines += [" ".join(map(_fmt, v)) for v in director]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Parse a file written by :func:`write_vtk` back into arrays."""
    with open(path) as fh:
        tok = fh.read().split("\n")
    out: dict = {}
    i = 0
    while i < len(tok):
        line = tok[i].split()
        if not line:
            i += 1
            continue
        key = line[0]
        if key == "POINTS":
            n = int(line[1])
            out["points"] = np.loadtxt(tok[i + 1 : i + 1 + n], ndmin=2)
            i += n + 1
        elif key == "CELLS":
            n = int(line[1])
            out["cells"] = np.loadtxt(tok[i + 1 : i + 1 + n], dtype=int, ndmin=2)[:, 1:]
            i += n + 1
        elif key == "CELL_TYPES":
            n = int(line[1])
            out["cell_types"] = np.array([int(t) for t in tok[i + 1 : i + 1 + n]])
            i += n + 1
        elif key == "POINT_DATA":
            out["n_points"] = int(line[1])
            i += 1
        elif key == "TENSORS":
            n = out["n_points"]
            out[line[1]] = np.loadtxt(tok[i + 1 : i + 1 + 3 * n], ndmin=2).reshape(n, 3, 3)
            i += 3 * n + 1
        elif key == "SCALARS":
            n = out["n_points"]
            out[line[1]] = np.array([float(t) for t in tok[i + 2 : i + 2 + n]])
            i += n + 2
        elif key == "VECTORS":
            n = out["n_points"]
            out[line[1]] = np.loadtxt(tok[i + 1 : i + 1 + n], ndmin=2)
            i += n + 1
        else:
            i += 1
    return out
