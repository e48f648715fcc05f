"""Adomian-series time integration and the nonlinear series machinery.

Within a step of size dt the solution is advanced as a series
Q = sum_n Q_n with Q_{n+1} = (dt / (n+1)) * op(Q_n), where ``op`` is the
spatial right-hand side (which already carries the minus sign of the
governing equations).  Each series term is a monomial of degree n in dt, so
the integration in time is exact; the step is restarted from the accumulated
sum.  The series is truncated once the newest term's norm drops below a
tolerance.

The module also houses the general nonlinear machinery: reciprocal-density
series coefficients, the convolution formulas for the Euler-system Adomian
polynomials, and a brute-force lambda-differentiation generator used as
their independent check.
"""

from math import factorial

import numpy as np


class SingularDensityError(ValueError):
    """Leading density coefficient is zero; 1/rho has no series."""


class AbsStepReport:
    """Outcome of one series step.

    iterations : number of series terms computed beyond the initial one
    final_term_norm : max-over-cells norm of the last computed term
    per_cell_depth : for each cell, the last term index whose local norm
        was still >= tol (adaptive-truncation accounting)
    term_norms : per-term max-over-cells norms
    converged : whether the stopping tolerance was reached before n_max
    """

    def __init__(self, iterations, final_term_norm, per_cell_depth, term_norms,
                 converged, series=None):
        self.iterations = iterations
        self.final_term_norm = final_term_norm
        self.per_cell_depth = per_cell_depth
        self.term_norms = term_norms
        self.converged = converged
        self.series = series

    def depth_histogram(self):
        """Histogram of per-cell truncation depths."""
        return np.bincount(self.per_cell_depth)


class AdomianSeries:
    """Ordered series terms with their norms and per-cell depth counts."""

    def __init__(self, terms, term_norms, n_terms_used):
        self.terms = terms
        self.term_norms = term_norms
        self.n_terms_used = n_terms_used


class LinearSystemContext:
    """Right-hand-side context for the surrogate ODE dq/dt = -A q.

    Provides the same ``apply``/``cell_norms`` interface as the DG spatial
    context, treating the whole vector as a single cell.
    """

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def apply(self, q):
        return -(q @ self.a.T)

    def cell_norms(self, q):
        return np.array([np.linalg.norm(q)])


def _unwrap(q):
    from .dg_space import DGField

    if isinstance(q, DGField):
        return q.coeffs, lambda arr: DGField(q.order, arr, q.mesh)
    return np.asarray(q, dtype=float), lambda arr: arr


def abs_step(q0, dt, tol, n_max, ctx, freeze_cells=False, collect_terms=False):
    """Advance one series step; returns (sum of terms, AbsStepReport).

    Terminates when the max-over-cells L2 norm of the newest term falls
    below ``tol``, or at ``n_max`` terms with ``converged=False``.  With
    ``freeze_cells`` a cell's terms are zeroed once the cell and all its
    face neighbors have dropped below tol/10 (it then stops feeding the
    series while its neighbors wind down on their own).
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if tol < 0 or n_max < 1:
        raise ValueError("tol must be >= 0 and n_max >= 1")
    arr0, wrap = _unwrap(q0)

    frozen = None
    neighbors = None
    if freeze_cells:
        neighbors = getattr(ctx, "cell_neighbors", None)
        if neighbors is None:
            raise ValueError("context does not expose cell adjacency; cannot freeze")

    term = arr0
    total = arr0.copy()
    term_norms = []
    terms = [wrap(arr0.copy())] if collect_terms else None
    n_cells = len(ctx.cell_norms(arr0))
    depth = np.zeros(n_cells, dtype=np.int64)
    converged = False
    n = 0
    for n in range(1, n_max + 1):
        term = (dt / n) * ctx.apply(term)
        if not np.all(np.isfinite(term)):
            raise FloatingPointError(f"non-finite series term at index {n}")
        if frozen is not None:
            term[frozen] = 0.0
        norms = ctx.cell_norms(term)
        gnorm = float(norms.max())
        term_norms.append(gnorm)
        depth[norms >= tol] = n
        total += term
        if collect_terms:
            terms.append(wrap(term.copy()))
        if gnorm < tol:
            converged = True
            break
        if freeze_cells:
            quiet = norms < 0.1 * tol
            newly = np.array(
                [
                    quiet[c] and all(quiet[nb] for nb in neighbors[c])
                    for c in range(n_cells)
                ]
            )
            frozen = newly if frozen is None else (frozen | newly)

    series = AdomianSeries(terms, list(term_norms), depth.copy()) if collect_terms else None
    report = AbsStepReport(
        iterations=n,
        final_term_norm=term_norms[-1] if term_norms else 0.0,
        per_cell_depth=depth,
        term_norms=term_norms,
        converged=converged or n_max == 0,
        series=series,
    )
    return wrap(total), report


def abs_series_terms(q0, dt, n_terms, ctx):
    """First ``n_terms`` series terms (beyond the initial state), with no
    stopping rule; used for term-scaling checks."""
    arr0, wrap = _unwrap(q0)
    term = arr0
    out = [wrap(arr0.copy())]
    for n in range(1, n_terms + 1):
        term = (dt / n) * ctx.apply(term)
        out.append(wrap(term.copy()))
    return out


def run_abs(q_init, t_final, dt, tol, n_max, ctx, freeze_cells=False):
    """Repeated series steps restarting from the accumulated solution.

    The step count is t_final / dt, with a shortened final step if t_final
    is not an exact multiple.  Returns (final state, list of AbsStepReport).
    """
    if t_final < 0 or dt <= 0:
        raise ValueError("t_final must be >= 0 and dt > 0")
    arr, wrap = _unwrap(q_init)
    q = arr.copy()
    reports = []
    remaining = t_final
    while remaining > 1e-12 * max(dt, 1.0):
        step = min(dt, remaining)
        q, rep = abs_step(q, step, tol, n_max, ctx, freeze_cells=freeze_cells)
        reports.append(rep)
        remaining -= step
    return wrap(q), reports


def total_series_terms(reports):
    """Series terms summed over all restarts (one Table-style reading)."""
    return sum(r.iterations for r in reports)


def max_series_terms(reports):
    """Largest per-restart term count (the other Table-style reading)."""
    return max((r.iterations for r in reports), default=0)


# -- nonlinear Adomian machinery -------------------------------------------


def rho_hat_coeffs(rho):
    """Series coefficients of 1/rho from those of rho.

    Defined by the Cauchy-product identity (sum rho_k L^k)(sum rhohat_k L^k)
    = 1, which forces rhohat_0 = 1/rho_0 and
    rhohat_k = -(1/rho_0) * sum_{j=1..k} rho_j rhohat_{k-j}.
    Entries may be scalars or arrays (pointwise).
    """
    rho = [np.asarray(r, dtype=float) for r in rho]
    if np.any(rho[0] == 0.0):
        raise SingularDensityError("leading density coefficient is zero")
    inv0 = 1.0 / rho[0]
    hat = [inv0]
    for k in range(1, len(rho)):
        acc = rho[1] * hat[k - 1]
        for j in range(2, k + 1):
            acc = acc + rho[j] * hat[k - j]
        hat.append(-inv0 * acc)
    return hat


def euler_nonlinear_rhs(vals, grads, gamma):
    """Pointwise nonlinear Euler space operator (the positive-sign transport
    terms of the primitive-variable system):

        ( d(rho u)/dx + d(rho v)/dy,
          u du/dx + v du/dy + (1/rho) dp/dx,
          u dv/dx + v dv/dy + (1/rho) dp/dy,
          u dp/dx + v dp/dy + gamma p (du/dx + dv/dy) )

    ``vals`` maps 'rho','u','v','p' to values; ``grads`` maps e.g. 'rho_x'
    to the corresponding derivative values.
    """
    rho, u, v, p = vals["rho"], vals["u"], vals["v"], vals["p"]
    g = grads
    cont = rho * g["u_x"] + u * g["rho_x"] + rho * g["v_y"] + v * g["rho_y"]
    mom_x = u * g["u_x"] + v * g["u_y"] + g["p_x"] / rho
    mom_y = u * g["v_x"] + v * g["v_y"] + g["p_y"] / rho
    energy = u * g["p_x"] + v * g["p_y"] + gamma * p * (g["u_x"] + g["v_y"])
    return cont, mom_x, mom_y, energy


def adomian_euler_terms(vals, grads, gamma):
    """Adomian polynomial N_n = (A_n, B_n, C_n, D_n) of the Euler system.

    ``vals['rho']`` etc. are sequences of the series terms 0..n (scalars or
    arrays), ``grads['rho_x']`` etc. the matching derivative sequences.  The
    four components are the convolution sums

        A_n = -sum_j [ d(rho_{n-j} u_j)/dx + d(rho_{n-j} v_j)/dy ]
        B_n = -sum_j [ u_{n-j} du_j/dx + v_{n-j} du_j/dy + rhohat_{n-j} dp_j/dx ]
        C_n = -sum_j [ u_{n-j} dv_j/dx + v_{n-j} dv_j/dy + rhohat_{n-j} dp_j/dy ]
        D_n = -sum_j [ u_{n-j} dp_j/dx + v_{n-j} dp_j/dy
                       + gamma p_j (du_{n-j}/dx + dv_{n-j}/dy) ]

    with the reciprocal-density coefficients from rho_hat_coeffs.
    """
    rho = [np.asarray(t, dtype=float) for t in vals["rho"]]
    u = [np.asarray(t, dtype=float) for t in vals["u"]]
    v = [np.asarray(t, dtype=float) for t in vals["v"]]
    p = [np.asarray(t, dtype=float) for t in vals["p"]]
    n = len(rho) - 1
    for key in ("u", "v", "p"):
        if len(vals[key]) != n + 1:
            raise ValueError("all series must have length n + 1")
    g = {k: [np.asarray(t, dtype=float) for t in grads[k]] for k in grads}
    hat = rho_hat_coeffs(rho)

    a_n = b_n = c_n = d_n = 0.0
    for j in range(n + 1):
        i = n - j
        a_n = a_n + (
            rho[i] * g["u_x"][j] + u[j] * g["rho_x"][i]
            + rho[i] * g["v_y"][j] + v[j] * g["rho_y"][i]
        )
        b_n = b_n + u[i] * g["u_x"][j] + v[i] * g["u_y"][j] + hat[i] * g["p_x"][j]
        c_n = c_n + u[i] * g["v_x"][j] + v[i] * g["v_y"][j] + hat[i] * g["p_y"][j]
        d_n = d_n + (
            u[i] * g["p_x"][j] + v[i] * g["p_y"][j]
            + gamma * p[j] * (g["u_x"][i] + g["v_y"][i])
        )
    return -a_n, -b_n, -c_n, -d_n


def finite_difference_weights(deriv_order, offsets, x0=0.0):
    """Fornberg weights for an arbitrary stencil; rows 0..deriv_order."""
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    if deriv_order >= n:
        raise ValueError("stencil too small for requested derivative")
    weights = np.zeros((deriv_order + 1, n))
    weights[0, 0] = 1.0
    c1 = 1.0
    for j in range(1, n):
        c2 = 1.0
        for k in range(j):
            c3 = offsets[j] - offsets[k]
            c2 *= c3
            for m in range(min(j, deriv_order), -1, -1):
                prev = weights[m - 1, k] if m > 0 else 0.0
                weights[m, k] = ((offsets[j] - x0) * weights[m, k] - m * prev) / c3
        for m in range(min(j, deriv_order), -1, -1):
            prev = weights[m - 1, j - 1] if m > 0 else 0.0
            weights[m, j] = c1 / c2 * (m * prev - (offsets[j - 1] - x0) * weights[m, j - 1])
        c1 = c2
    return weights


def adomian_terms_by_lambda_fd(vals, grads, gamma, step=0.05, n_points=11):
    """Brute-force Adomian polynomial for order n = len(series) - 1.

    Numerically differentiates the nonlinear operator applied to the
    lambda-weighted partial sums, n times in lambda at 0, on a symmetric
    high-order stencil; returns the same negated 4-tuple layout as
    adomian_euler_terms.  Accuracy is limited by the finite differencing.
    """
    n = len(vals["rho"]) - 1
    half = n_points // 2
    offsets = np.arange(-half, half + 1) * step
    w = finite_difference_weights(n, offsets)[n]

    def partial(seq, lam):
        acc = np.asarray(seq[0], dtype=float).copy()
        for k in range(1, len(seq)):
            acc = acc + lam**k * np.asarray(seq[k], dtype=float)
        return acc

    comps = None
    for wk, lam in zip(w, offsets):
        v_lam = {key: partial(vals[key], lam) for key in vals}
        g_lam = {key: partial(grads[key], lam) for key in grads}
        f = euler_nonlinear_rhs(v_lam, g_lam, gamma)
        if comps is None:
            comps = [wk * fi for fi in f]
        else:
            comps = [acc + wk * fi for acc, fi in zip(comps, f)]
    fact = float(factorial(n))
    return tuple(-c / fact for c in comps)


def linear_abs_vs_rk_equivalence(a, q0, dt, n_terms):
    """Series recursion on dq/dt = -A q versus the truncated exponential.

    Returns (abs_result, taylor_result); the two agree to roundoff because
    the series terms are exactly the Taylor terms of exp(-A dt).
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    a = np.asarray(a, dtype=float)
    q0 = np.asarray(q0, dtype=float)

    term = q0.copy()
    acc = q0.copy()
    for n in range(1, n_terms + 1):
        term = (dt / n) * -(a @ term)
        acc = acc + term

    total = np.eye(len(a))
    power = np.eye(len(a))
    fact = 1.0
    for n in range(1, n_terms + 1):
        power = power @ (-dt * a)
        fact *= n
        total = total + power / fact
    return acc, total @ q0
