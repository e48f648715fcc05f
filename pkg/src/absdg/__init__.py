"""Adomian-series time stepping for the 2D linearized Euler equations with
discontinuous-Galerkin space discretization, plus Runge-Kutta baselines, an
exact-solution oracle, and a Von Neumann stability analyzer."""

from .kernels import HAVE_CYTHON, backend_name

__version__ = "0.1.0"

__all__ = ["HAVE_CYTHON", "backend_name", "__version__"]
