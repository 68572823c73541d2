"""Legacy VTK (3.0 ASCII) export of nodal fields, plus CSV helpers.

The writer emits an unstructured grid with POINT_DATA vectors/scalars; the
reader understands exactly the grammar the writer produces and exists so
round-trip tests can validate the files without external tooling.  Floats
are printed with 17 significant digits so identical runs give byte-identical
artifacts.
"""

from __future__ import annotations

import numpy as np

from .kinds import ElementKind
from .mesh import Mesh

FLOAT_FMT = "%.17g"


def _fmt(values) -> str:
    return " ".join(FLOAT_FMT % v for v in np.atleast_1d(values))


def write_vtk(path, mesh: Mesh, point_data: dict) -> None:
    """Write mesh + nodal fields.  point_data maps name -> (n_nodes,) scalar
    array or (n_nodes, dim) vector array."""
    n = mesh.n_nodes
    pts3 = np.zeros((n, 3))
    pts3[:, : mesh.dim] = mesh.nodes
    nen = mesh.kind.nodes_per_element
    lines = [
        "# vtk DataFile Version 3.0",
        "stokeslab field output",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines.extend(_fmt(p) for p in pts3)
    lines.append(f"CELLS {mesh.n_elements} {mesh.n_elements * (nen + 1)}")
    lines.extend(
        f"{nen} " + " ".join(str(i) for i in conn) for conn in mesh.elements
    )
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines.extend([str(mesh.kind.vtk_cell_type)] * mesh.n_elements)
    lines.append(f"POINT_DATA {n}")
    for name, data in point_data.items():
        data = np.asarray(data, dtype=float)
        if data.ndim == 2:
            vec3 = np.zeros((n, 3))
            vec3[:, : data.shape[1]] = data
            lines.append(f"VECTORS {name} double")
            lines.extend(_fmt(v) for v in vec3)
        else:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(FLOAT_FMT % v for v in data)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Parse a file written by write_vtk.

    Returns (points (n,3), cells (nel, nen), cell_type, point_data dict).
    """
    with open(path) as fh:
        tokens_by_line = [line.split() for line in fh]
    lines = tokens_by_line
    if not lines or lines[0][:5] != "# vtk DataFile Version 3.0".split():
        raise ValueError(f"{path}: not a legacy VTK 3.0 file")
    if lines[2] != ["ASCII"] or lines[3] != ["DATASET", "UNSTRUCTURED_GRID"]:
        raise ValueError(f"{path}: expected ASCII unstructured grid")
    i = 4
    if lines[i][0] != "POINTS":
        raise ValueError(f"{path}: POINTS section missing")
    n = int(lines[i][1])
    i += 1
    points = np.array([[float(t) for t in lines[i + k]] for k in range(n)])
    i += n
    if lines[i][0] != "CELLS":
        raise ValueError(f"{path}: CELLS section missing")
    nel = int(lines[i][1])
    i += 1
    cells = []
    for k in range(nel):
        row = [int(t) for t in lines[i + k]]
        if len(row) != row[0] + 1:
            raise ValueError(f"{path}: malformed cell row {k}")
        cells.append(row[1:])
    i += nel
    if lines[i][0] != "CELL_TYPES":
        raise ValueError(f"{path}: CELL_TYPES section missing")
    i += 1
    types = {int(lines[i + k][0]) for k in range(nel)}
    if len(types) != 1:
        raise ValueError(f"{path}: mixed cell types not supported")
    i += nel
    if lines[i][0] != "POINT_DATA":
        raise ValueError(f"{path}: POINT_DATA section missing")
    i += 1
    point_data = {}
    while i < len(lines):
        head = lines[i]
        if not head:
            i += 1
            continue
        if head[0] == "VECTORS":
            vals = np.array(
                [[float(t) for t in lines[i + 1 + k]] for k in range(n)]
            )
            point_data[head[1]] = vals
            i += 1 + n
        elif head[0] == "SCALARS":
            vals = np.array([float(lines[i + 2 + k][0]) for k in range(n)])
            point_data[head[1]] = vals
            i += 2 + n
        else:
            raise ValueError(f"{path}: unsupported attribute {head[0]!r}")
    return points, np.array(cells), types.pop(), point_data


def write_csv(path, header, rows, comments=()) -> None:
    """Write a small CSV with deterministic float formatting."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(FLOAT_FMT % v)
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
