"""Triangle mesh ingestion and geometry precomputation.

Mesh files are plain ASCII ('#' starts a comment):

    nodes N        followed by N lines  "x y"
    triangles M    followed by M lines  "i j k"   (0-based, counter-clockwise)
    boundary B     followed by B lines  "i j tag" (tag: wall|nonreflective|free)

Every edge of the triangulation must belong to one triangle (and then be
listed in the boundary section) or to exactly two triangles.
"""

import numpy as np

TAG_WALL = 0
TAG_NONREFLECTIVE = 1
TAG_FREE = 2

TAG_NAMES = {"wall": TAG_WALL, "nonreflective": TAG_NONREFLECTIVE, "free": TAG_FREE}
TAG_STRINGS = {v: k for k, v in TAG_NAMES.items()}


class MeshFormatError(ValueError):
    """Raised on malformed mesh files; message carries the line number."""


class MeshValidationError(ValueError):
    """Raised when a parsed mesh violates a structural invariant."""


class Mesh:
    """Immutable unstructured triangle mesh.

    nodes : (n_nodes, 2) float array
    triangles : (n_cells, 3) int array, counter-clockwise
    boundary_faces : (n_bfaces, 3) int array of (node_a, node_b, tag)
    """

    def __init__(self, nodes, triangles, boundary_faces):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_faces = np.ascontiguousarray(boundary_faces, dtype=np.int64)
        if self.boundary_faces.size == 0:
            self.boundary_faces = self.boundary_faces.reshape(0, 3)
        self._validate()
        for arr in (self.nodes, self.triangles, self.boundary_faces):
            arr.flags.writeable = False

    @property
    def n_cells(self):
        return len(self.triangles)

    @property
    def n_nodes(self):
        return len(self.nodes)

    def signed_areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self):
        p = self.nodes[self.triangles]
        out = []
        for i, j in ((0, 1), (1, 2), (2, 0)):
            out.append(np.hypot(*(p[:, j] - p[:, i]).T))
        return np.concatenate(out)

    def _validate(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshValidationError("nodes must be an (N, 2) array")
        if not np.all(np.isfinite(self.nodes)):
            raise MeshValidationError("non-finite node coordinates")
        n_nodes = len(self.nodes)
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= n_nodes
        ):
            bad = np.argwhere(
                (self.triangles < 0) | (self.triangles >= n_nodes)
            )[0][0]
            raise MeshValidationError(f"triangle {bad} references a missing node")
        areas = self.signed_areas()
        if np.any(areas <= 0):
            bad = int(np.argmin(areas))
            raise MeshValidationError(
                f"triangle {bad} has non-positive area {areas[bad]:.3e} "
                "(nodes must be counter-clockwise)"
            )

        # edge incidence: interior edges belong to two cells, boundary to one
        incidence = {}
        for c, tri in enumerate(self.triangles):
            for i, j in ((0, 1), (1, 2), (2, 0)):
                a, b = int(tri[i]), int(tri[j])
                if a == b:
                    raise MeshValidationError(f"triangle {c} has a degenerate edge")
                incidence.setdefault((min(a, b), max(a, b)), []).append(c)
        for edge, cells in incidence.items():
            if len(cells) > 2:
                raise MeshValidationError(
                    f"edge {edge} is shared by more than two triangles"
                )

        listed = set()
        for k, (a, b, tag) in enumerate(self.boundary_faces):
            a, b = int(a), int(b)
            if a == b:
                raise MeshValidationError(f"boundary face {k} is degenerate")
            if not (0 <= a < n_nodes and 0 <= b < n_nodes):
                raise MeshValidationError(f"boundary face {k} references a missing node")
            if int(tag) not in TAG_STRINGS:
                raise MeshValidationError(f"boundary face {k} has unknown tag {tag}")
            key = (min(a, b), max(a, b))
            if key in listed:
                raise MeshValidationError(f"boundary face {k} listed twice")
            if key not in incidence:
                raise MeshValidationError(
                    f"boundary face {k} ({a},{b}) is not an edge of any triangle"
                )
            if len(incidence[key]) != 1:
                raise MeshValidationError(
                    f"boundary face {k} ({a},{b}) is an interior edge"
                )
            listed.add(key)
        for edge, cells in incidence.items():
            if len(cells) == 1 and edge not in listed:
                raise MeshValidationError(
                    f"edge {edge} of triangle {cells[0]} lies on the boundary "
                    "but is missing from the boundary section"
                )


def _tokens(path):
    """Yield (line_number, fields) for non-empty, non-comment lines."""
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield ln, line.split()


def load_mesh(path):
    """Parse and validate a mesh file.  Raises MeshFormatError with the
    offending line number, or MeshValidationError naming the bad entity."""
    stream = _tokens(path)

    def next_line(what):
        try:
            return next(stream)
        except StopIteration:
            raise MeshFormatError(f"{path}: unexpected end of file while reading {what}")

    def read_header(keyword):
        ln, fields = next_line(f"'{keyword}' header")
        if len(fields) != 2 or fields[0] != keyword:
            raise MeshFormatError(f"{path}:{ln}: expected '{keyword} <count>'")
        try:
            return int(fields[1])
        except ValueError:
            raise MeshFormatError(f"{path}:{ln}: bad count in '{keyword}' header")

    n = read_header("nodes")
    nodes = np.empty((n, 2))
    for k in range(n):
        ln, fields = next_line(f"node {k}")
        try:
            nodes[k] = [float(fields[0]), float(fields[1])]
        except (ValueError, IndexError):
            raise MeshFormatError(f"{path}:{ln}: expected 'x y' for node {k}")

    m = read_header("triangles")
    tris = np.empty((m, 3), dtype=np.int64)
    for k in range(m):
        ln, fields = next_line(f"triangle {k}")
        try:
            tris[k] = [int(fields[0]), int(fields[1]), int(fields[2])]
        except (ValueError, IndexError):
            raise MeshFormatError(f"{path}:{ln}: expected 'i j k' for triangle {k}")

    b = read_header("boundary")
    bfaces = np.empty((b, 3), dtype=np.int64)
    for k in range(b):
        ln, fields = next_line(f"boundary face {k}")
        try:
            i, j, tag = int(fields[0]), int(fields[1]), fields[2]
        except (ValueError, IndexError):
            raise MeshFormatError(f"{path}:{ln}: expected 'i j tag' for boundary face {k}")
        if tag not in TAG_NAMES:
            raise MeshFormatError(
                f"{path}:{ln}: unknown boundary tag '{tag}' "
                f"(expected one of {sorted(TAG_NAMES)})"
            )
        bfaces[k] = [i, j, TAG_NAMES[tag]]

    extra = next(stream, None)
    if extra is not None:
        raise MeshFormatError(f"{path}:{extra[0]}: trailing content after boundary section")
    return Mesh(nodes, tris, bfaces)


def save_mesh(mesh, path):
    """Write a mesh in the ASCII format accepted by load_mesh."""
    with open(path, "w") as fh:
        fh.write(f"nodes {mesh.n_nodes}\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write(f"triangles {mesh.n_cells}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        fh.write(f"boundary {len(mesh.boundary_faces)}\n")
        for a, b, tag in mesh.boundary_faces:
            fh.write(f"{a} {b} {TAG_STRINGS[int(tag)]}\n")


class GeometryCache:
    """Per-cell and per-face geometry for the spatial operator.

    Faces are ordered deterministically (by owner cell, then local edge).
    For interior faces the normal points out of the owner cell; for boundary
    faces it points out of the domain.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        nodes, tris = mesh.nodes, mesh.triangles
        nc = mesh.n_cells

        p = nodes[tris]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.cell_area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        self.cell_centroid = p.mean(axis=1)
        # affine map x = v0 + J*(xi, eta); inverse transposed for gradients
        self.jac = np.stack([d1, d2], axis=-1)  # (nc, 2, 2), columns d1 d2
        self.jac_det = 2.0 * self.cell_area
        self.inv_jac = np.linalg.inv(self.jac)

        btag = {}
        for a, b, tag in mesh.boundary_faces:
            btag[(min(int(a), int(b)), max(int(a), int(b)))] = int(tag)

        first_seen = {}
        owner, neighbor, tag = [], [], []
        fnodes = []
        for c in range(nc):
            tri = tris[c]
            for i, j in ((0, 1), (1, 2), (2, 0)):
                a, b = int(tri[i]), int(tri[j])
                key = (min(a, b), max(a, b))
                if key in first_seen:
                    neighbor[first_seen[key]] = c
                else:
                    first_seen[key] = len(owner)
                    owner.append(c)
                    neighbor.append(-1)
                    tag.append(btag.get(key, -1))
                    fnodes.append((a, b))  # owner's CCW orientation

        self.face_owner = np.array(owner, dtype=np.int64)
        self.face_neighbor = np.array(neighbor, dtype=np.int64)
        self.face_tag = np.array(tag, dtype=np.int64)
        self.face_nodes = np.array(fnodes, dtype=np.int64)

        pa = nodes[self.face_nodes[:, 0]]
        pb = nodes[self.face_nodes[:, 1]]
        d = pb - pa
        self.face_length = np.hypot(d[:, 0], d[:, 1])
        # CCW edge direction -> outward normal of the owner
        self.face_normal = np.column_stack([d[:, 1], -d[:, 0]]) / self.face_length[:, None]
        self.face_a = pa
        self.face_b = pb

        self.n_faces = len(self.face_owner)
        self.interior = self.face_neighbor >= 0
        cf = [[] for _ in range(nc)]
        cn = [[] for _ in range(nc)]
        for f in range(self.n_faces):
            o, nb = int(self.face_owner[f]), int(self.face_neighbor[f])
            cf[o].append(f)
            if nb >= 0:
                cf[nb].append(f)
                cn[o].append(nb)
                cn[nb].append(o)
        self.cell_faces = cf
        self.cell_neighbors = cn

    def to_reference(self, cell, points):
        """Map physical points (..., 2) into a cell's reference coordinates."""
        v0 = self.mesh.nodes[self.mesh.triangles[cell, 0]]
        return (np.asarray(points) - v0) @ self.inv_jac[cell].T

    def characteristic_edge(self):
        """Median edge length; the mesh-size parameter h of a run."""
        return float(np.median(self.face_length))


def compute_geometry(mesh):
    """Precompute areas, normals, and adjacency for a validated mesh."""
    return GeometryCache(mesh)


def structured_square_mesh(n, half_extent=2.85, center=(0.0, 0.0), tag="free", tags=None):
    """Right-triangle split of an n-by-n square grid centred at ``center``.

    Produces 2*n^2 cells.  ``tags`` may map sides ('left', 'right', 'bottom',
    'top') to tag names, overriding the uniform ``tag``.
    """
    side_tags = {s: tag for s in ("left", "right", "bottom", "top")}
    if tags:
        side_tags.update(tags)
    for name in side_tags.values():
        if name not in TAG_NAMES:
            raise ValueError(f"unknown boundary tag '{name}'")

    cx, cy = center
    xs = np.linspace(cx - half_extent, cx + half_extent, n + 1)
    ys = np.linspace(cy - half_extent, cy + half_extent, n + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([xg.ravel(), yg.ravel()])

    def nid(ix, iy):
        return iy * (n + 1) + ix

    tris = []
    for iy in range(n):
        for ix in range(n):
            ll, lr = nid(ix, iy), nid(ix + 1, iy)
            ul, ur = nid(ix, iy + 1), nid(ix + 1, iy + 1)
            tris.append((ll, lr, ur))
            tris.append((ll, ur, ul))

    bfaces = []
    for ix in range(n):
        bfaces.append((nid(ix, 0), nid(ix + 1, 0), TAG_NAMES[side_tags["bottom"]]))
        bfaces.append((nid(ix, n), nid(ix + 1, n), TAG_NAMES[side_tags["top"]]))
    for iy in range(n):
        bfaces.append((nid(0, iy), nid(0, iy + 1), TAG_NAMES[side_tags["left"]]))
        bfaces.append((nid(n, iy), nid(n, iy + 1), TAG_NAMES[side_tags["right"]]))

    return Mesh(nodes, np.array(tris), np.array(bfaces))
