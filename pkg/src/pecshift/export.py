"""Field and grid export: CSV (lossless 17-digit floats) and legacy VTK."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .grid import CLASS_NAMES, GridTopology, NodeClass
from .solver import FieldState


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_field(state: FieldState, grid: GridTopology,
                 phi: Optional[np.ndarray], classes: np.ndarray,
                 path) -> None:
    """CSV with one row per node, row-major by (j, i); floats carry 17
    significant digits so a re-read reproduces the state bitwise."""
    path = Path(path)
    phi_arr = np.zeros(grid.shape) if phi is None else phi
    try:
        with open(path, "w") as fh:
            fh.write("x,y,class,phi,hx,hy,ez\n")
            for j in range(grid.ny):
                for i in range(grid.nx):
                    fh.write(",".join((
                        _fmt(grid.x[i, j]), _fmt(grid.y[i, j]),
                        CLASS_NAMES[NodeClass(classes[i, j])],
                        _fmt(phi_arr[i, j]), _fmt(state.hx[i, j]),
                        _fmt(state.hy[i, j]), _fmt(state.ez[i, j]))) + "\n")
    except OSError as err:
        raise OSError(f"cannot write field CSV {path}: {err}") from err


def read_field_csv(path) -> dict:
    """Load an export_field CSV back into flat arrays (row-major by (j, i))."""
    path = Path(path)
    cols: dict = {"x": [], "y": [], "class": [], "phi": [],
                  "hx": [], "hy": [], "ez": []}
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != list(cols):
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        for line in fh:
            vals = line.strip().split(",")
            for name, v in zip(cols, vals):
                cols[name].append(v if name == "class" else float(v))
    return {k: (v if k == "class" else np.array(v)) for k, v in cols.items()}


def export_grid(grid: GridTopology, classes: np.ndarray, path) -> None:
    """Grid dump: i,j,x,y,shifted,class — one row per node."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("i,j,x,y,shifted,class\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                fh.write(f"{i},{j},{_fmt(grid.x[i, j])},{_fmt(grid.y[i, j])},"
                         f"{int(grid.shifted[i, j])},"
                         f"{CLASS_NAMES[NodeClass(classes[i, j])]}\n")


def export_vtk(state: FieldState, grid: GridTopology,
               phi: Optional[np.ndarray], path) -> None:
    """Legacy-VTK structured points over the unshifted lattice with nodal
    scalars (visualization convenience; shifted coordinates live in the CSV)."""
    path = Path(path)
    n = grid.nx * grid.ny
    fields = {"ez": state.ez, "hx": state.hx, "hy": state.hy}
    if phi is not None:
        fields["phi"] = phi
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"pecshift fields t={state.time:.17g}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx} {grid.ny} 1\n")
        fh.write(f"ORIGIN {grid.x0:.17g} {grid.y0:.17g} 0\n")
        fh.write(f"SPACING {grid.dx:.17g} {grid.dy:.17g} 1\n")
        fh.write(f"POINT_DATA {n}\n")
        for name, arr in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for j in range(grid.ny):
                fh.write(" ".join(_fmt(arr[i, j]) for i in range(grid.nx)))
                fh.write("\n")
