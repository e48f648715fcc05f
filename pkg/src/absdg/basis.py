"""Modal basis and quadrature rules on the reference triangle.

The reference element is the unit triangle {(xi, eta): xi >= 0, eta >= 0,
xi + eta <= 1}.  Basis functions are monomials orthonormalized against the
cell-mean inner product (f, g) = |T|^-1 * integral(f*g), so that the first
function is identically 1 and its coefficient is the cell average.  With an
affine map to any physical triangle the mass matrix stays the identity, which
makes the semi-discrete operator a plain coefficient update with no solve.
"""

import numpy as np

# monomial exponents (xi^a * eta^b) per total degree, orders 0..2
_EXPONENTS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

N_BASIS = {0: 1, 1: 3, 2: 6}


def _monomial_integral(a, b):
    """Exact integral of xi^a * eta^b over the reference triangle."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)


def _gauss01(n):
    """Gauss-Legendre rule mapped to [0, 1]; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _triangle_rule_deg5():
    """Symmetric 7-point degree-5 rule; returns points and plain-measure
    weights (summing to the reference area 1/2)."""
    s15 = np.sqrt(15.0)
    a1 = (6.0 + s15) / 21.0
    a2 = (6.0 - s15) / 21.0
    w0 = 9.0 / 40.0
    w1 = (155.0 + s15) / 1200.0
    w2 = (155.0 - s15) / 1200.0
    pts = [(1.0 / 3.0, 1.0 / 3.0)]
    wts = [w0]
    for a, w in ((a1, w1), (a2, w2)):
        pts += [(a, a), (1.0 - 2.0 * a, a), (a, 1.0 - 2.0 * a)]
        wts += [w, w, w]
    return np.array(pts), 0.5 * np.array(wts)


def _collapsed_rule(n1d):
    """Tensor Gauss rule collapsed onto the triangle via
    (u, v) -> (u*(1-v), v); exact to total degree 2*n1d - 2 and rapidly
    convergent for analytic integrands.  Plain-measure weights."""
    g, w = _gauss01(n1d)
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = (u * (1.0 - v)).ravel()
    eta = v.ravel()
    wts = (wu * wv * (1.0 - v)).ravel()
    return np.column_stack([xi, eta]), wts


class BasisSet:
    """Orthonormal modal basis of a given polynomial order with its
    quadrature rules.

    Attributes
    ----------
    order : polynomial degree (0, 1 or 2)
    n_basis : number of modes (1, 3 or 6)
    vol_points, vol_weights : volume rule, exact to degree 5
    proj_points, proj_weights : dense collapsed rule for projections and
        error norms (default 12x12 Gauss)
    face_points, face_weights : Gauss rule on [0, 1], exact to degree 5
    """

    def __init__(self, order, n_face_points=3, n_proj_1d=12):
        if order not in N_BASIS:
            raise ValueError(f"unsupported polynomial order {order}")
        self.order = order
        self.n_basis = N_BASIS[order]
        self.exponents = _EXPONENTS[: self.n_basis]

        # Gram matrix of monomials in the cell-mean inner product
        nb = self.n_basis
        gram = np.empty((nb, nb))
        for i, (ai, bi) in enumerate(self.exponents):
            for j, (aj, bj) in enumerate(self.exponents):
                gram[i, j] = 2.0 * _monomial_integral(ai + aj, bi + bj)
        chol = np.linalg.cholesky(gram)
        # rows of C express each basis function in monomial coordinates
        self.coeffs = np.linalg.inv(chol)

        # monomial derivative maps: d(m_k) = sum_l P[k, l] m_l
        p_xi = np.zeros((nb, nb))
        p_eta = np.zeros((nb, nb))
        for k, (a, b) in enumerate(self.exponents):
            if a > 0:
                p_xi[k, self.exponents.index((a - 1, b))] = a
            if b > 0:
                p_eta[k, self.exponents.index((a, b - 1))] = b

        # plain-measure matrices int(d(phi_i) * phi_j) used by the weak form
        gram0 = 0.5 * gram  # plain measure = gram / 2
        self.dxi_mass = self.coeffs @ p_xi @ gram0 @ self.coeffs.T
        self.deta_mass = self.coeffs @ p_eta @ gram0 @ self.coeffs.T

        self.vol_points, self.vol_weights = _triangle_rule_deg5()
        self.proj_points, self.proj_weights = _collapsed_rule(n_proj_1d)
        self.face_points, self.face_weights = _gauss01(n_face_points)

    def _monomials(self, points):
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        cols = [xi**a * eta**b for a, b in self.exponents]
        return np.stack(cols, axis=-1)

    def eval(self, points):
        """Basis values at reference points; shape (..., n_basis)."""
        return self._monomials(points) @ self.coeffs.T

    def eval_grad(self, points):
        """Reference-space gradients; shape (..., n_basis, 2)."""
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        dxi = []
        deta = []
        for a, b in self.exponents:
            dxi.append(a * xi ** max(a - 1, 0) * eta**b if a else np.zeros_like(xi))
            deta.append(b * xi**a * eta ** max(b - 1, 0) if b else np.zeros_like(xi))
        gx = np.stack(dxi, axis=-1) @ self.coeffs.T
        gy = np.stack(deta, axis=-1) @ self.coeffs.T
        return np.stack([gx, gy], axis=-1)
