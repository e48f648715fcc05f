"""Discontinuous-Galerkin discretization of the spatial operator.

``SpatialContext`` precomputes every geometric quantity the operator needs
(volume matrices, face traces, boundary rules) so that one operator
application is a single kernel call.  The kernel returns the mass-inverted
weak form of -(A0 d/dx + B0 d/dy), i.e. the right-hand side of
dQ/dt = op(Q); series and Runge-Kutta steppers need no further geometry.
"""

import numpy as np

from . import _kernels_np as _np_kernel
from .basis import BasisSet
from .kernels import get_backend
from .lee_core import MeanFlow, mean_flux_matrices
from .mesh import (
    TAG_FREE,
    TAG_NONREFLECTIVE,
    TAG_WALL,
    compute_geometry,
)

# boundary rules (what is applied), as opposed to mesh tags (what is labeled)
RULE_WALL = _np_kernel.BC_WALL
RULE_NONREFLECTIVE = _np_kernel.BC_NONREFLECTIVE
RULE_NAMES = {"wall": RULE_WALL, "nonreflective": RULE_NONREFLECTIVE}

#: default mapping tag -> rule; 'free' uses the non-reflective rule
DEFAULT_BC_RULES = {"wall": "wall", "nonreflective": "nonreflective", "free": "nonreflective"}

_TAG_KEYS = {TAG_WALL: "wall", TAG_NONREFLECTIVE: "nonreflective", TAG_FREE: "free"}


class DGField:
    """Per-cell modal coefficients of a 4-component field.

    coeffs has shape (n_cells, n_basis, 4); for order 0 the single mode per
    cell is the cell-average state.
    """

    def __init__(self, order, coeffs, mesh):
        self.order = order
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.mesh = mesh

    def copy(self):
        return DGField(self.order, self.coeffs.copy(), self.mesh)

    def centroid_values(self, basis, geom):
        """State at cell centroids, shape (n_cells, 4)."""
        phi = basis.eval(np.array([1.0 / 3.0, 1.0 / 3.0]))
        return np.einsum("m,cmk->ck", phi, self.coeffs)


def apply_wall_bc(interior, normal):
    """Ghost state for a slip wall: normal velocity mirrored, the rest
    copied, so the face-average velocity carries no normal component."""
    nx, ny = float(normal[0]), float(normal[1])
    return _np_kernel.wall_ghost(interior, nx, ny)


def apply_nonreflective_bc(interior, normal, fm):
    """Ghost state from the characteristic decomposition of A0 nx + B0 ny:
    outgoing amplitudes are taken from the interior, incoming are zeroed."""
    nx, ny = float(normal[0]), float(normal[1])
    m1, m2 = float(fm.a0[0, 0]), float(fm.b0[0, 0])
    return _np_kernel.nonreflective_ghost(interior, nx, ny, m1, m2)


class SpatialContext:
    """Precomputed operator for one (mesh, order, mean flow, alpha, bc) tuple.

    Parameters
    ----------
    mesh : Mesh
    order : polynomial order 0..2
    mean : MeanFlow (or None for quiescent flow)
    alpha : scalar jump-dissipation coefficient of the face flux
    bc_rules : optional dict mapping tag names to rule names, overriding
        DEFAULT_BC_RULES
    backend : 'auto' (default), 'python', or 'cython'
    """

    def __init__(
        self,
        mesh,
        order,
        mean=None,
        alpha=0.0,
        bc_rules=None,
        geom=None,
        basis=None,
        backend=None,
        n_proj_1d=12,
    ):
        self.mesh = mesh
        self.order = order
        self.mean = mean if mean is not None else MeanFlow(0.0, 0.0)
        self.alpha = float(alpha)
        self.fm = mean_flux_matrices(self.mean)
        self.geom = geom if geom is not None else compute_geometry(mesh)
        self.basis = basis if basis is not None else BasisSet(order, n_proj_1d=n_proj_1d)
        self.kernel = get_backend(backend)

        rules = dict(DEFAULT_BC_RULES)
        if bc_rules:
            for tag, rule in bc_rules.items():
                if tag not in rules:
                    raise ValueError(f"unknown boundary tag '{tag}'")
                if rule not in RULE_NAMES:
                    raise ValueError(f"unknown boundary rule '{rule}'")
                rules[tag] = rule
        self.bc_rules = rules

        geom_ = self.geom
        basis_ = self.basis
        nb = basis_.n_basis

        # volume matrices including the Jacobian determinant
        inv_jac = geom_.inv_jac
        det = geom_.jac_det
        self.gx = det[:, None, None] * (
            inv_jac[:, 0, 0, None, None] * basis_.dxi_mass
            + inv_jac[:, 1, 0, None, None] * basis_.deta_mass
        )
        self.gy = det[:, None, None] * (
            inv_jac[:, 0, 1, None, None] * basis_.dxi_mass
            + inv_jac[:, 1, 1, None, None] * basis_.deta_mass
        )
        self.inv_area = 1.0 / geom_.cell_area

        # face quadrature traces in both adjacent cells
        g = basis_.face_points
        pts = geom_.face_a[:, None, :] + g[None, :, None] * (
            geom_.face_b - geom_.face_a
        )[:, None, :]
        self.face_phys_points = pts

        def traces(cells):
            v0 = mesh.nodes[mesh.triangles[cells, 0]]
            local = np.einsum("fjk,fqk->fqj", inv_jac[cells], pts - v0[:, None, :])
            return np.ascontiguousarray(basis_.eval(local))

        self.trace_o = traces(geom_.face_owner)
        self.trace_n = np.zeros_like(self.trace_o)
        inter = geom_.interior
        self.trace_n[inter] = traces(geom_.face_neighbor[inter])[inter]

        # resolved per-face rule codes (-1 interior)
        f_bc = np.full(geom_.n_faces, -1, dtype=np.int64)
        for f in np.nonzero(~inter)[0]:
            tag = int(geom_.face_tag[f])
            f_bc[f] = RULE_NAMES[rules[_TAG_KEYS[tag]]]
        self.f_bc = f_bc

        self._kernel_args = (
            self.inv_area,
            self.gx,
            self.gy,
            geom_.face_owner,
            geom_.face_neighbor,
            self.f_bc,
            np.ascontiguousarray(geom_.face_normal[:, 0]),
            np.ascontiguousarray(geom_.face_normal[:, 1]),
            geom_.face_length,
            self.trace_o,
            self.trace_n,
            basis_.face_weights,
        )

    # -- raw-array interface used by the time steppers ---------------------

    def apply(self, coeffs, alpha=None):
        """Spatial right-hand side for a raw coefficient array."""
        out = np.empty_like(coeffs)
        self.kernel.apply_operator(
            np.ascontiguousarray(coeffs),
            out,
            *self._kernel_args,
            self.fm.a0,
            self.fm.b0,
            self.alpha if alpha is None else float(alpha),
            self.mean.m1,
            self.mean.m2,
        )
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("spatial operator produced non-finite values")
        return out

    def cell_norms(self, coeffs):
        """L2 norm of the 4-component field over each cell."""
        return np.sqrt(
            self.geom.cell_area * np.einsum("cmk,cmk->c", coeffs, coeffs)
        )

    @property
    def cell_neighbors(self):
        return self.geom.cell_neighbors

    # -- field-level interface ---------------------------------------------

    def _check(self, field):
        if field.mesh is not self.mesh or field.order != self.order:
            raise ValueError("field does not live on this context's mesh/order")

    def rhs(self, field):
        self._check(field)
        return DGField(self.order, self.apply(field.coeffs), self.mesh)

    def cell_points(self, points):
        """Physical images of reference points in every cell: (nc, nq, 2)."""
        v0 = self.mesh.nodes[self.mesh.triangles[:, 0]]
        return v0[:, None, :] + np.einsum("cij,qj->cqi", self.geom.jac, points)

    def project(self, fn):
        return project_initial_condition(fn, self.mesh, self.basis, self.geom)

    def l2_error(self, field, reference, component=None):
        return l2_error(field, reference, self, component=component)


def spatial_operator(field, ctx, alpha=None):
    """Weak-form evaluation of the right-hand side -(A0 dQ/dx + B0 dQ/dy),
    mass-matrix inverted; for order 0 this reduces to the cell-average
    flux-balance scheme -(1/|S_i|) sum_j F_ij."""
    ctx._check(field)
    return DGField(field.order, ctx.apply(field.coeffs, alpha=alpha), field.mesh)


def project_initial_condition(fn, mesh, basis, geom=None):
    """L2 projection of a pointwise state function onto the DG space.

    ``fn(x, y)`` must accept arrays and return shape (..., 4).  For order 0
    the projection is the quadrature cell average.
    """
    geom = geom if geom is not None else compute_geometry(mesh)
    pts = basis.proj_points
    wts = basis.proj_weights
    v0 = mesh.nodes[mesh.triangles[:, 0]]
    phys = v0[:, None, :] + np.einsum("cij,qj->cqi", geom.jac, pts)
    vals = np.asarray(fn(phys[..., 0], phys[..., 1]), dtype=float)
    if vals.shape != phys[..., 0].shape + (4,):
        raise ValueError("initial-condition function must return shape (..., 4)")
    if not np.all(np.isfinite(vals)):
        raise ValueError("initial condition is not finite on the domain")
    phi = basis.eval(pts)
    coeffs = 2.0 * np.einsum("q,cqk,qm->cmk", wts, vals, phi)
    return DGField(basis.order, coeffs, mesh)


def _component_index(component):
    from .lee_core import COMPONENT_NAMES

    if component is None:
        return None
    if isinstance(component, str):
        return COMPONENT_NAMES.index(component)
    return int(component)


def l2_error(field, reference, ctx, component=None):
    """Relative L2(domain) distance between a DG field and a pointwise
    reference function.

    ``reference(x, y)`` returns shape (..., 4), or a scalar array if a single
    ``component`` ('rho', 'u', 'v', 'p' or an index) is selected.  Raises if
    the reference norm vanishes.
    """
    ctx._check(field)
    basis, geom = ctx.basis, ctx.geom
    pts, wts = basis.proj_points, basis.proj_weights
    phys = ctx.cell_points(pts)
    phi = basis.eval(pts)
    vals = np.einsum("qm,cmk->cqk", phi, field.coeffs)
    ref = np.asarray(reference(phys[..., 0], phys[..., 1]), dtype=float)
    comp = _component_index(component)
    if comp is not None:
        vals = vals[..., comp]
        if ref.ndim == vals.ndim + 1:
            ref = ref[..., comp]
    diff = vals - ref
    if diff.ndim == 3:
        num = np.einsum("c,q,cqk->", geom.jac_det, wts, diff**2)
        den = np.einsum("c,q,cqk->", geom.jac_det, wts, ref**2)
    else:
        num = np.einsum("c,q,cq->", geom.jac_det, wts, diff**2)
        den = np.einsum("c,q,cq->", geom.jac_det, wts, ref**2)
    if den == 0.0:
        raise ValueError("reference norm is zero; relative error undefined")
    return float(np.sqrt(num / den))


class PointLocator:
    """Uniform-bin point location over a mesh, for cross-mesh comparison."""

    def __init__(self, mesh, geom=None):
        self.mesh = mesh
        self.geom = geom if geom is not None else compute_geometry(mesh)
        nodes = mesh.nodes
        self.xmin, self.ymin = nodes.min(axis=0)
        self.xmax, self.ymax = nodes.max(axis=0)
        n = max(1, int(np.sqrt(mesh.n_cells)))
        self.nx = self.ny = n
        self.dx = (self.xmax - self.xmin) / n or 1.0
        self.dy = (self.ymax - self.ymin) / n or 1.0
        self.bins = [[] for _ in range(n * n)]
        tris = nodes[mesh.triangles]
        lo = tris.min(axis=1)
        hi = tris.max(axis=1)
        for c in range(mesh.n_cells):
            i0 = self._clip_x(lo[c, 0])
            i1 = self._clip_x(hi[c, 0])
            j0 = self._clip_y(lo[c, 1])
            j1 = self._clip_y(hi[c, 1])
            for j in range(j0, j1 + 1):
                for i in range(i0, i1 + 1):
                    self.bins[j * n + i].append(c)

    def _clip_x(self, x):
        return min(max(int((x - self.xmin) / self.dx), 0), self.nx - 1)

    def _clip_y(self, y):
        return min(max(int((y - self.ymin) / self.dy), 0), self.ny - 1)

    def locate(self, x, y):
        """Cell containing (x, y); the best candidate is returned even for
        points marginally outside (clamped barycentric test)."""
        cands = self.bins[self._clip_y(y) * self.nx + self._clip_x(x)]
        best, best_score = -1, -np.inf
        p = np.array([x, y])
        for c in cands:
            xi = self.geom.to_reference(c, p)
            score = min(xi[0], xi[1], 1.0 - xi[0] - xi[1])
            if score > best_score:
                best, best_score = c, score
        if best < 0 or best_score < -1e-9:
            # fall back to a global search for stray points
            for c in range(self.mesh.n_cells):
                xi = self.geom.to_reference(c, p)
                score = min(xi[0], xi[1], 1.0 - xi[0] - xi[1])
                if score > best_score:
                    best, best_score = c, score
        return best

    def evaluate(self, field, basis, points):
        """Evaluate a DG field at arbitrary physical points, shape (np, 4)."""
        points = np.atleast_2d(points)
        out = np.empty((len(points), 4))
        for k, (x, y) in enumerate(points):
            c = self.locate(x, y)
            xi = self.geom.to_reference(c, (x, y))
            out[k] = basis.eval(xi) @ field.coeffs[c]
        return out
