"""Explicit Runge-Kutta baselines over the same spatial operator.

rk2 is the midpoint method (the comparison scheme), rk4 the classical
fourth-order method used for fine-grid reference solutions.
"""

import numpy as np

STAGE_COUNT = {"rk2": 2, "rk4": 4}


class RKConfig:
    def __init__(self, scheme, dt, t_final):
        if scheme not in STAGE_COUNT:
            raise ValueError(f"unknown RK scheme '{scheme}'")
        if dt <= 0 or t_final < dt:
            raise ValueError("need dt > 0 and t_final >= dt")
        self.scheme = scheme
        self.dt = float(dt)
        self.t_final = float(t_final)


def _unwrap(q):
    from .dg_space import DGField

    if isinstance(q, DGField):
        return q.coeffs, lambda arr: DGField(q.order, arr, q.mesh)
    return np.asarray(q, dtype=float), lambda arr: arr


def rk_step(q, dt, scheme, ctx):
    """One explicit step of the midpoint (rk2) or classical (rk4) method,
    with ctx.apply as the right-hand side."""
    arr, wrap = _unwrap(q)
    f = ctx.apply
    if scheme == "rk2":
        k1 = f(arr)
        k2 = f(arr + 0.5 * dt * k1)
        out = arr + dt * k2
    elif scheme == "rk4":
        k1 = f(arr)
        k2 = f(arr + 0.5 * dt * k1)
        k3 = f(arr + 0.5 * dt * k2)
        k4 = f(arr + dt * k3)
        out = arr + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise ValueError(f"unknown RK scheme '{scheme}'")
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after RK step")
    return wrap(out)


def count_steps(t_final, dt):
    """Number of steps run_rk takes (last one possibly shortened)."""
    n_full = int(np.floor(t_final / dt + 1e-12))
    remainder = t_final - n_full * dt
    return n_full + (1 if remainder > 1e-12 * max(dt, 1.0) else 0)


def run_rk(q_init, config, ctx):
    """March to config.t_final; the last step is shortened if needed."""
    arr, wrap = _unwrap(q_init)
    q = arr.copy()
    remaining = config.t_final
    while remaining > 1e-12 * max(config.dt, 1.0):
        step = min(config.dt, remaining)
        q = rk_step(q, step, config.scheme, ctx)
        remaining -= step
    return wrap(q)
