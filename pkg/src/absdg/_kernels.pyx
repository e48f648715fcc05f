# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled DG operator kernel; mirrors _kernels_np.apply_operator."""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BC_WALL = 0
BC_NONREFLECTIVE = 1


cdef inline void _wall_ghost(double* q, double nx, double ny, double* g) noexcept nogil:
    cdef double un = q[1] * nx + q[2] * ny
    g[0] = q[0]
    g[1] = q[1] - 2.0 * un * nx
    g[2] = q[2] - 2.0 * un * ny
    g[3] = q[3]


cdef inline void _nonreflective_ghost(double* q, double nx, double ny,
                                      double m1, double m2, double* g) noexcept nogil:
    cdef double mn = m1 * nx + m2 * ny
    cdef double un = q[1] * nx + q[2] * ny
    cdef double ut = -q[1] * ny + q[2] * nx
    cdef double w_plus = 0.5 * (q[3] + un)
    cdef double w_minus = 0.5 * (q[3] - un)
    cdef double w_entropy = q[0] - q[3]
    cdef double w_vorticity = ut
    if mn + 1.0 < 0.0:
        w_plus = 0.0
    if mn - 1.0 < 0.0:
        w_minus = 0.0
    if mn < 0.0:
        w_entropy = 0.0
        w_vorticity = 0.0
    cdef double p = w_plus + w_minus
    cdef double un_g = w_plus - w_minus
    g[0] = p + w_entropy
    g[1] = un_g * nx - w_vorticity * ny
    g[2] = un_g * ny + w_vorticity * nx
    g[3] = p


def apply_operator(
    double[:, :, ::1] coeffs,
    double[:, :, ::1] out,
    double[::1] inv_area,
    double[:, :, ::1] gx,
    double[:, :, ::1] gy,
    long[::1] f_owner,
    long[::1] f_neigh,
    long[::1] f_bc,
    double[::1] f_nx,
    double[::1] f_ny,
    double[::1] f_len,
    double[:, :, ::1] trace_o,
    double[:, :, ::1] trace_n,
    double[::1] fw,
    double[:, ::1] a0,
    double[:, ::1] b0,
    double alpha,
    double m1,
    double m2,
):
    cdef Py_ssize_t nc = coeffs.shape[0]
    cdef Py_ssize_t nb = coeffs.shape[1]
    cdef Py_ssize_t nf = f_owner.shape[0]
    cdef Py_ssize_t nq = fw.shape[0]
    cdef Py_ssize_t c, i, j, k, f, q, m
    cdef long o, nbr, bc
    cdef double qa[4]
    cdef double qb[4]
    cdef double qo[4]
    cdef double qn[4]
    cdef double s[4]
    cdef double flux[4]
    cdef double nx, ny, w, acc, phi

    with nogil:
        # volume term
        for c in range(nc):
            for i in range(nb):
                for k in range(4):
                    out[c, i, k] = 0.0
            for j in range(nb):
                for k in range(4):
                    qa[k] = (a0[k, 0] * coeffs[c, j, 0] + a0[k, 1] * coeffs[c, j, 1]
                             + a0[k, 2] * coeffs[c, j, 2] + a0[k, 3] * coeffs[c, j, 3])
                    qb[k] = (b0[k, 0] * coeffs[c, j, 0] + b0[k, 1] * coeffs[c, j, 1]
                             + b0[k, 2] * coeffs[c, j, 2] + b0[k, 3] * coeffs[c, j, 3])
                for i in range(nb):
                    for k in range(4):
                        out[c, i, k] += gx[c, i, j] * qa[k] + gy[c, i, j] * qb[k]

        # face term
        for f in range(nf):
            o = f_owner[f]
            nbr = f_neigh[f]
            bc = f_bc[f]
            nx = f_nx[f]
            ny = f_ny[f]
            for q in range(nq):
                for k in range(4):
                    acc = 0.0
                    for m in range(nb):
                        acc += trace_o[f, q, m] * coeffs[o, m, k]
                    qo[k] = acc
                if bc < 0:
                    for k in range(4):
                        acc = 0.0
                        for m in range(nb):
                            acc += trace_n[f, q, m] * coeffs[nbr, m, k]
                        qn[k] = acc
                elif bc == 0:
                    _wall_ghost(qo, nx, ny, qn)
                else:
                    _nonreflective_ghost(qo, nx, ny, m1, m2, qn)
                for k in range(4):
                    s[k] = qo[k] + qn[k]
                for k in range(4):
                    flux[k] = 0.5 * (
                        nx * (a0[k, 0] * s[0] + a0[k, 1] * s[1]
                              + a0[k, 2] * s[2] + a0[k, 3] * s[3])
                        + ny * (b0[k, 0] * s[0] + b0[k, 1] * s[1]
                                + b0[k, 2] * s[2] + b0[k, 3] * s[3])
                    ) - 0.5 * alpha * (qn[k] - qo[k])
                w = f_len[f] * fw[q]
                for m in range(nb):
                    phi = w * trace_o[f, q, m]
                    for k in range(4):
                        out[o, m, k] -= phi * flux[k]
                if bc < 0:
                    for m in range(nb):
                        phi = w * trace_n[f, q, m]
                        for k in range(4):
                            out[nbr, m, k] += phi * flux[k]

        for c in range(nc):
            for i in range(nb):
                for k in range(4):
                    out[c, i, k] *= inv_area[c]
    return np.asarray(out)
