"""Vectorized numpy implementation of the DG operator kernel.

This is the portable fallback for the compiled extension in ``_kernels.pyx``;
both implement the same signature and the same arithmetic.  The kernel
evaluates the mass-inverted weak form of -(A0 d/dx + B0 d/dy) acting on a
modal coefficient array, including boundary ghost states.

Boundary codes in ``f_bc``: -1 interior, 0 slip wall, 1 characteristic
non-reflective.
"""

import numpy as np

BC_WALL = 0
BC_NONREFLECTIVE = 1


def wall_ghost(q, nx, ny):
    """Mirror the normal velocity; rho and p copied.  q: (..., 4)."""
    q = np.asarray(q, dtype=float)
    un = q[..., 1] * nx + q[..., 2] * ny
    ghost = q.copy()
    ghost[..., 1] = q[..., 1] - 2.0 * un * nx
    ghost[..., 2] = q[..., 2] - 2.0 * un * ny
    return ghost


def nonreflective_ghost(q, nx, ny, m1, m2):
    """Characteristic ghost: outgoing amplitudes kept, incoming zeroed.

    The face matrix A0*nx + B0*ny has eigenvalues Mn + {1, -1, 0, 0}
    (acoustic pair, entropy, vorticity) with Mn = m1*nx + m2*ny.  Waves with
    non-negative speed leave the domain and are kept from the interior state.
    """
    q = np.asarray(q, dtype=float)
    mn = m1 * nx + m2 * ny
    un = q[..., 1] * nx + q[..., 2] * ny
    ut = -q[..., 1] * ny + q[..., 2] * nx
    w_plus = 0.5 * (q[..., 3] + un)
    w_minus = 0.5 * (q[..., 3] - un)
    w_entropy = q[..., 0] - q[..., 3]
    w_vorticity = ut

    keep_plus = np.where(mn + 1.0 >= 0.0, 1.0, 0.0)
    keep_minus = np.where(mn - 1.0 >= 0.0, 1.0, 0.0)
    keep_zero = np.where(mn >= 0.0, 1.0, 0.0)

    w_plus = w_plus * keep_plus
    w_minus = w_minus * keep_minus
    w_entropy = w_entropy * keep_zero
    w_vorticity = w_vorticity * keep_zero

    p = w_plus + w_minus
    un_g = w_plus - w_minus
    ghost = np.empty_like(q)
    ghost[..., 0] = p + w_entropy
    ghost[..., 1] = un_g * nx - w_vorticity * ny
    ghost[..., 2] = un_g * ny + w_vorticity * nx
    ghost[..., 3] = p
    return ghost


def apply_operator(
    coeffs,
    out,
    inv_area,
    gx,
    gy,
    f_owner,
    f_neigh,
    f_bc,
    f_nx,
    f_ny,
    f_len,
    trace_o,
    trace_n,
    fw,
    a0,
    b0,
    alpha,
    m1,
    m2,
):
    """Fill ``out`` with the spatial right-hand side for ``coeffs``.

    coeffs, out : (n_cells, n_basis, 4)
    gx, gy      : (n_cells, n_basis, n_basis) volume matrices
    trace_o/n   : (n_faces, n_face_q, n_basis) basis traces at face points
    """
    # volume term: sum_j Gx[i,j] (A0 q_j) + Gy[i,j] (B0 q_j)
    np.einsum("cij,cjk->cik", gx, coeffs @ a0.T, out=out)
    out += np.einsum("cij,cjk->cik", gy, coeffs @ b0.T)

    # face traces
    qo = np.einsum("fqm,fmk->fqk", trace_o, coeffs[f_owner])
    qn = np.empty_like(qo)
    interior = f_bc < 0
    if np.any(interior):
        qn[interior] = np.einsum(
            "fqm,fmk->fqk", trace_n[interior], coeffs[f_neigh[interior]]
        )
    wall = f_bc == BC_WALL
    if np.any(wall):
        qn[wall] = wall_ghost(qo[wall], f_nx[wall, None], f_ny[wall, None])
    nonrefl = f_bc == BC_NONREFLECTIVE
    if np.any(nonrefl):
        qn[nonrefl] = nonreflective_ghost(
            qo[nonrefl], f_nx[nonrefl, None], f_ny[nonrefl, None], m1, m2
        )

    # Lax-Friedrichs flux times the surface measure
    s = qo + qn
    flux = 0.5 * (
        f_nx[:, None, None] * (s @ a0.T) + f_ny[:, None, None] * (s @ b0.T)
    )
    flux -= 0.5 * alpha * (qn - qo)
    flux *= (f_len[:, None] * fw[None, :])[:, :, None]

    surf = np.zeros_like(out)
    np.add.at(surf, f_owner, np.einsum("fqm,fqk->fmk", trace_o, flux))
    if np.any(interior):
        np.add.at(
            surf,
            f_neigh[interior],
            -np.einsum("fqm,fqk->fmk", trace_n[interior], flux[interior]),
        )
    out -= surf
    out *= inv_area[:, None, None]
    return out
