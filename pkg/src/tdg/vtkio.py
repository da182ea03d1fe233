"""Legacy ASCII VTK export of the current mesh and per-element data."""

from __future__ import annotations

import numpy as np

from .basis import element_directions

_CELL_TYPES = {2: 9, 3: 12}  # VTK_QUAD, VTK_HEXAHEDRON

# Corner offsets in VTK node order: quads counterclockwise, hexahedra as
# bottom face then top face.
_CORNERS = {
    2: ((0, 0), (1, 0), (1, 1), (0, 1)),
    3: ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)),
}


def _fmt(x):
    return f"{float(x):.17g}"


def write_vtk(path, mesh, eta_by_element=None):
    """Write the mesh as an unstructured grid with cell data.

    Cell arrays: effective degree ``q_K``, indicator ``eta_K`` (zero when
    ``eta_by_element`` is not given), refinement ``level``, and the first
    plane-wave direction ``direction_0`` (padded to three components).
    """
    eta_by_element = eta_by_element or {}
    dim = mesh.dim
    corners = _CORNERS[dim]
    point_index = {}
    points = []
    cells = []
    ordered = [mesh.elements[eid] for eid in mesh.element_ids()]
    for el in ordered:
        ids = []
        for offset in corners:
            coord = tuple(
                float(el.hi[ax]) if offset[ax] else float(el.lo[ax])
                for ax in range(dim)
            )
            idx = point_index.get(coord)
            if idx is None:
                idx = len(points)
                point_index[coord] = idx
                points.append(coord)
            ids.append(idx)
        cells.append(ids)
    lines = [
        "# vtk DataFile Version 3.0",
        "plane-wave DG mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
    ]
    for coord in points:
        padded = coord + (0.0,) * (3 - dim)
        lines.append(" ".join(_fmt(c) for c in padded))
    n_cells = len(cells)
    n_per_cell = len(corners)
    lines.append(f"CELLS {n_cells} {n_cells * (n_per_cell + 1)}")
    for ids in cells:
        lines.append(" ".join(str(i) for i in [n_per_cell] + ids))
    lines.append(f"CELL_TYPES {n_cells}")
    lines.extend([str(_CELL_TYPES[dim])] * n_cells)
    lines.append(f"CELL_DATA {n_cells}")
    lines.append("SCALARS q_K int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(el.degree) for el in ordered)
    lines.append("SCALARS eta_K double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(_fmt(eta_by_element.get(el.id, 0.0)) for el in ordered)
    lines.append("SCALARS level int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(el.level) for el in ordered)
    lines.append("VECTORS direction_0 double")
    for el in ordered:
        first = np.zeros(3)
        first[:dim] = element_directions(el)[0]
        lines.append(" ".join(_fmt(c) for c in first))
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
