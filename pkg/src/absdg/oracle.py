"""Ground-truth machinery: the exact Gaussian-pulse pressure field and the
Von Neumann stability analysis of the first-order 1D scheme.

The exact pressure of a Gaussian pulse convected by a uniform x-Mach flow is

    p(x, y, t) = eps1/(2 alpha1) * int_0^inf exp(-xi^2/(4 alpha1))
                 cos(xi t) J0(xi eta) xi dxi,
    eta = sqrt((x - M t)^2 + y^2),

evaluated with panel Gauss quadrature sized to the oscillation rate.
"""

from collections import namedtuple

import numpy as np

# -- Bessel J0 ---------------------------------------------------------------
# Two-interval rational approximation (series-like rational on [0, 5],
# rational asymptotic form beyond); peak absolute error ~4e-16.  Classic
# public-domain coefficient tables (Cephes, S. Moshier).

_SQ2OPI = 7.9788456080286535587989e-1  # sqrt(2/pi)
_PIO4 = 7.85398163397448309616e-1

_RP = [
    -4.79443220978201773821e9,
    1.95617491946556577543e12,
    -2.49248344360967716204e14,
    9.70862251047306323952e15,
]
_RQ = [  # implicit leading coefficient 1.0
    4.99563147152651017219e2,
    1.73785401676374683123e5,
    4.84409658339962045305e7,
    1.11855537045356834862e10,
    2.11277520115489217587e12,
    3.10518229857422583814e14,
    3.18121955943204943306e16,
    1.71086294081043136091e18,
]
_PP = [
    7.96936729297347051624e-4,
    8.28352392107440799803e-2,
    1.23953371646414299388e0,
    5.44725003058768775090e0,
    8.74716500199817011941e0,
    5.30324038235394892183e0,
    9.99999999999999997821e-1,
]
_PQ = [
    9.24408810558863637013e-4,
    8.56288474354474431428e-2,
    1.25352743901058953537e0,
    5.47097740330417105182e0,
    8.76190883237069594232e0,
    5.30605288235394617618e0,
    1.00000000000000000218e0,
]
_QP = [
    -1.13663838898469149931e-2,
    -1.28252718670509318512e0,
    -1.95539544257735972385e1,
    -9.32060152123768231369e1,
    -1.77681167980488050595e2,
    -1.47077505154951170175e2,
    -5.14105326766599330220e1,
    -6.05014350600728481186e0,
]
_QQ = [  # implicit leading coefficient 1.0
    6.43178256118178023184e1,
    8.56430025976980587198e2,
    3.88240183605401609683e3,
    7.24046774195652478189e3,
    5.93072701187316984827e3,
    2.06209331660327847417e3,
    2.42005740240291393179e2,
]
_DR1 = 5.78318596294678452118e0
_DR2 = 3.04712623436620863991e1


def _polevl(x, coef):
    ans = np.full_like(x, coef[0])
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def _p1evl(x, coef):
    ans = x + coef[0]
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind, |error| < 1e-12.

    Accepts scalars or arrays.
    """
    x = np.abs(np.asarray(x, dtype=float))
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    small = x <= 5.0
    if np.any(small):
        z = x[small] * x[small]
        tiny = x[small] < 1e-5
        vals = (z - _DR1) * (z - _DR2) * _polevl(z, _RP) / _p1evl(z, _RQ)
        vals = np.where(tiny, 1.0 - 0.25 * z, vals)
        out[small] = vals
    large = ~small
    if np.any(large):
        xl = x[large]
        w = 5.0 / xl
        z = 25.0 / (xl * xl)
        p = _polevl(z, _PP) / _polevl(z, _PQ)
        q = _polevl(z, _QP) / _p1evl(z, _QQ)
        xn = xl - _PIO4
        out[large] = _SQ2OPI * (p * np.cos(xn) - w * q * np.sin(xn)) / np.sqrt(xl)
    return float(out[0]) if scalar else out


# -- exact pulse pressure ----------------------------------------------------

PulseParams = namedtuple("PulseParams", ("alpha1", "eps1", "mach"))
PulseParams.__new__.__defaults__ = (1.0, 1e-5, 0.0)


def pulse_initial_condition(params, rho_mode="pressure"):
    """Pointwise initial state of the Gaussian pressure pulse.

    rho' is set equal to p' ('pressure', the acoustic choice) or to zero
    ('zero'); velocities start at rest.  Returns fn(x, y) -> (..., 4).
    """
    if rho_mode not in ("pressure", "zero"):
        raise ValueError("rho_mode must be 'pressure' or 'zero'")

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = params.eps1 * np.exp(-params.alpha1 * (x * x + y * y))
        out = np.zeros(p.shape + (4,))
        out[..., 3] = p
        if rho_mode == "pressure":
            out[..., 0] = p
        return out

    return fn


def exact_pressure(x, y, t, params, panel_refine=1.0):
    """Exact pulse pressure; broadcasts over array x, y at a scalar time.

    The semi-infinite integral is truncated where the Gaussian envelope
    falls below 1e-16 and evaluated with 16-point Gauss panels no wider
    than pi over the fastest oscillation rate, so the absolute error is
    far below 1e-12 * eps1.  ``panel_refine`` > 1 shrinks the panels
    (used for quadrature-robustness checks).
    """
    if not np.isfinite(t) or t < 0:
        raise ValueError("time must be finite and non-negative")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("coordinates must be finite")
    alpha, eps, mach = params.alpha1, params.eps1, params.mach
    eta = np.hypot(x - mach * t, y)

    xi_max = np.sqrt(4.0 * alpha * 37.0)  # envelope < 1e-16 beyond
    rate = max(float(t), float(np.max(eta, initial=0.0)), 1.0)
    n_panels = int(np.ceil(rate * xi_max / np.pi * panel_refine))
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, xi_max, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xi = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wxi = (half[:, None] * weights[None, :]).ravel()

    base = wxi * np.exp(-xi * xi / (4.0 * alpha)) * np.cos(xi * t) * xi
    flat = eta.reshape(-1)
    out = np.zeros_like(flat)
    chunk = 64
    for start in range(0, len(xi), chunk):
        xi_c = xi[start : start + chunk]
        base_c = base[start : start + chunk]
        out += bessel_j0(flat[:, None] * xi_c[None, :]) @ base_c
    result = eps / (2.0 * alpha) * out.reshape(eta.shape)
    return float(result) if result.ndim == 0 else result


# -- Von Neumann stability ----------------------------------------------------

StabilityQuery = namedtuple("StabilityQuery", ("n", "r", "theta"))


def amplification_factor(n, r, theta):
    """Per-term growth magnitude |G_n| of the 1D first-order scheme with
    jump dissipation h/(2t):

        |G_n| = 2 |sin(theta/2)| / (n+1)
                * sqrt(r^2 cos^2(theta/2) + 0.25 sin^2(theta/2))
    """
    theta = np.asarray(theta, dtype=float)
    s = np.sin(0.5 * theta)
    c = np.cos(0.5 * theta)
    return 2.0 * np.abs(s) / (n + 1.0) * np.sqrt(r * r * c * c + 0.25 * s * s)


def stability_envelope(theta_bar):
    """The bound curve H = |sin t| sqrt(0.5 cos^2 t + 0.25 sin^2 t) whose
    supremum (1/2) certifies |G_n| < 1 for r below (n+1)/sqrt(2)."""
    theta_bar = np.asarray(theta_bar, dtype=float)
    s = np.sin(theta_bar)
    c = np.cos(theta_bar)
    return np.abs(s) * np.sqrt(0.5 * c * c + 0.25 * s * s)


StabilityScan = namedtuple("StabilityScan", ("rows", "r_star", "h_theta", "h_values"))


def empirical_stability_scan(n_max, r_grid, theta_grid, csv_path=None):
    """Tabulate sup over theta of |G_n| per (n, r).

    Returns rows (n, r, sup_G), the largest stable r per n (sup <= 1 within
    1e-12), and the envelope-curve samples.  Optionally writes the table as
    CSV with columns n, r, sup_G.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    theta_grid = np.asarray(theta_grid, dtype=float)
    if r_grid.size == 0 or theta_grid.size == 0:
        raise ValueError("r and theta grids must be non-empty")
    rows = []
    r_star = {}
    for n in range(n_max + 1):
        best = -np.inf
        for r in r_grid:
            sup = float(np.max(amplification_factor(n, r, theta_grid)))
            rows.append((n, float(r), sup))
            if sup <= 1.0 + 1e-12 and r > best:
                best = float(r)
        r_star[n] = best
    h_theta = np.linspace(0.0, 2.0 * np.pi, 2001)
    h_values = stability_envelope(h_theta)
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("n,r,sup_G\n")
            for n, r, sup in rows:
                fh.write(f"{n},{r:.17g},{sup:.17g}\n")
    return StabilityScan(rows, r_star, h_theta, h_values)


def simulate_1d_abs(u0, a, h, t, n_terms, alpha=None, return_terms=False):
    """Series recursion for 1D advection on a periodic grid:

        u_{n+1} = (-t/(n+1)) (1/2h) [ a (u^{i+1} - u^{i-1})
                                      - alpha (u^{i+1} - 2 u^i + u^{i-1}) ]

    summed over ``n_terms`` terms.  ``alpha`` defaults to h/(2t), the
    coupling assumed by the amplification-factor analysis.
    """
    u = np.asarray(u0, dtype=complex if np.iscomplexobj(u0) else float).copy()
    if alpha is None:
        alpha = h / (2.0 * t)
    term = u.copy()
    total = u.copy()
    terms = [term.copy()]
    for n in range(n_terms):
        up = np.roll(term, -1)
        um = np.roll(term, 1)
        term = (-t / (n + 1.0)) / (2.0 * h) * (
            a * (up - um) - alpha * (up - 2.0 * term + um)
        )
        total += term
        terms.append(term.copy())
    if return_terms:
        return total, terms
    return total
