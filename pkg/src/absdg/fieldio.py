"""Field output: centroid CSV, modal-coefficient sidecar, legacy VTK.

The centroid CSV holds one row per cell with 17 significant digits so that a
write/read round trip is exact.  The sidecar carries the full modal
coefficients (plus mesh path and order) for exact restarts and for
quadrature-consistent field comparison.
"""

import numpy as np

from .lee_core import COMPONENT_NAMES


def write_field_csv(path, cell_ids, centroids, values):
    """Columns: cell_id, x, y, rho, u, v, p (centroid values)."""
    with open(path, "w") as fh:
        fh.write("cell_id,x,y," + ",".join(COMPONENT_NAMES) + "\n")
        for c, (x, y), q in zip(cell_ids, centroids, values):
            cols = [str(int(c)), f"{x:.17g}", f"{y:.17g}"]
            cols += [f"{v:.17g}" for v in q]
            fh.write(",".join(cols) + "\n")


def read_field_csv(path):
    """Returns (cell_ids, centroids (n,2), values (n,4))."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    ids = data["cell_id"].astype(np.int64)
    centroids = np.column_stack([data["x"], data["y"]])
    values = np.column_stack([data[name] for name in COMPONENT_NAMES])
    return ids, centroids, values


def write_coeffs_sidecar(path, field, mesh_path):
    """Modal coefficients with enough header metadata for exact restarts."""
    nc, nb, _ = field.coeffs.shape
    with open(path, "w") as fh:
        fh.write("# absdg modal coefficients\n")
        fh.write(f"# mesh={mesh_path}\n")
        fh.write(f"# order={field.order}\n")
        fh.write(f"# n_basis={nb}\n")
        fh.write("cell_id,mode," + ",".join(COMPONENT_NAMES) + "\n")
        for c in range(nc):
            for m in range(nb):
                cols = [str(c), str(m)] + [f"{v:.17g}" for v in field.coeffs[c, m]]
                fh.write(",".join(cols) + "\n")


def read_coeffs_sidecar(path):
    """Returns (mesh_path, order, coeffs (nc, nb, 4))."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if "=" in line:
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
    if "order" not in meta or "n_basis" not in meta:
        raise ValueError(f"{path}: missing sidecar metadata")
    order = int(meta["order"])
    nb = int(meta["n_basis"])
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    nc = int(data["cell_id"].max()) + 1
    coeffs = np.zeros((nc, nb, 4))
    cells = data["cell_id"].astype(int)
    modes = data["mode"].astype(int)
    for k, name in enumerate(COMPONENT_NAMES):
        coeffs[cells, modes, k] = data[name]
    return meta.get("mesh"), order, coeffs


def write_vtk(path, mesh, cell_data, title="absdg field"):
    """Legacy ASCII unstructured-grid VTK with cell data only.

    ``cell_data`` maps names to per-cell scalar arrays.
    """
    nc = mesh.n_cells
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {nc} {4 * nc}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"3 {i} {j} {k}\n")
        fh.write(f"CELL_TYPES {nc}\n")
        fh.write("5\n" * nc)
        fh.write(f"CELL_DATA {nc}\n")
        for name, values in cell_data.items():
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for v in values:
                fh.write(f"{v:.17g}\n")
