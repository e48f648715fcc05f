"""State, mean-flow flux matrices, and the face flux for the linearized
Euler equations.

The perturbation state is q = (rho', u', v', p') in nondimensional form
(sound speed 1), advected by a constant mean flow with Mach components
(m1, m2).  The governing system is dq/dt + A0 dq/dx + B0 dq/dy = 0.
"""

import warnings
from collections import namedtuple

import numpy as np

# component indices
RHO, U, V, P = 0, 1, 2, 3
COMPONENT_NAMES = ("rho", "u", "v", "p")

State4 = namedtuple("State4", COMPONENT_NAMES)


class MeanFlow:
    """Constant mean-flow Mach components.  Subsonic values are expected;
    a supersonic magnitude is allowed but warned about."""

    def __init__(self, m1=0.0, m2=0.0):
        m1, m2 = float(m1), float(m2)
        if not (np.isfinite(m1) and np.isfinite(m2)):
            raise ValueError("mean-flow Mach components must be finite")
        if np.hypot(m1, m2) >= 1.0:
            warnings.warn(
                f"mean flow |M| = {np.hypot(m1, m2):.3f} is not subsonic",
                stacklevel=2,
            )
        self.m1 = m1
        self.m2 = m2

    def __repr__(self):
        return f"MeanFlow(m1={self.m1}, m2={self.m2})"


FluxMatrices = namedtuple("FluxMatrices", ("a0", "b0"))


def mean_flux_matrices(mean):
    """Constant flux matrices A0, B0 of the mean flow."""
    m1, m2 = mean.m1, mean.m2
    a0 = np.array(
        [
            [m1, 1.0, 0.0, 0.0],
            [0.0, m1, 0.0, 1.0],
            [0.0, 0.0, m1, 0.0],
            [0.0, 1.0, 0.0, m1],
        ]
    )
    b0 = np.array(
        [
            [m2, 0.0, 1.0, 0.0],
            [0.0, m2, 0.0, 0.0],
            [0.0, 0.0, m2, 1.0],
            [0.0, 0.0, 1.0, m2],
        ]
    )
    return FluxMatrices(a0, b0)


def directional_flux(q, normal, fm):
    """(A0*nx + B0*ny) q for a unit normal; q may be (..., 4)."""
    q = np.asarray(q, dtype=float)
    nx, ny = normal
    return q @ (nx * fm.a0 + ny * fm.b0).T


def lax_friedrichs_flux(qi, qj, normal, fm, alpha):
    """Central face flux plus scalar jump dissipation.

    Returns 1/2 (A0 (qi+qj) nx + B0 (qi+qj) ny) - alpha/2 (qj - qi).
    The dissipation is applied to the full jump (no normal components),
    which keeps the flux conservative: flux(qi, qj, n) = -flux(qj, qi, -n).
    """
    if alpha < 0:
        raise ValueError("dissipation coefficient must be non-negative")
    qi = np.asarray(qi, dtype=float)
    qj = np.asarray(qj, dtype=float)
    central = 0.5 * directional_flux(qi + qj, normal, fm)
    return central - 0.5 * alpha * (qj - qi)


def max_wave_speed(mean):
    """Spectral radius bound |M| + 1 (unit sound speed)."""
    return float(np.hypot(mean.m1, mean.m2) + 1.0)
