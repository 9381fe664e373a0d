"""lp quasi-norm (0 < p < 1) minimization over convex sets.

Exact scalar epigraph projections and proxes via polynomial root finding,
two-block ADMM solvers for sparse vector recovery and Schatten-p rank
minimization, a non-monotone accelerated proximal-gradient method, seeded
experiment generators, and a benchmark CLI.
"""

from .scalar_core import (
    EpigraphPoint,
    RationalExponent,
    project_epigraph,
    project_epigraph_l1,
    prox_scalar,
    real_nonneg_roots,
    soft_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "RationalExponent",
    "EpigraphPoint",
    "real_nonneg_roots",
    "project_epigraph",
    "project_epigraph_l1",
    "prox_scalar",
    "soft_threshold",
    "__version__",
]
