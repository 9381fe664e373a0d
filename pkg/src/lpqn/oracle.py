"""Independent brute-force references for validating the exact routines.

These oracles deliberately avoid the polynomial/root machinery of
:mod:`lpqn.scalar_core` and the dual Newton of :mod:`lpqn.convex_proj`: grid
scans with golden-section refinement for the scalar problems, first-order
residuals for the ball projections, finite differences for gradients, and a
generic convex-QP solve for the hinge projection.  They ship with the library
so the CLI ``verify`` subcommand can run them outside the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .scalar_core import EpigraphPoint, RationalExponent

__all__ = [
    "GridSpec",
    "grid_min_1d",
    "oracle_project_epigraph",
    "oracle_prox_scalar",
    "kkt_residual_ball",
    "fd_gradient_check",
    "oracle_project_hinge",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

#: Default scan covers every magnitude the experiments feed the scalar
#: routines (APG prox arguments are pre-scaled by the gradient step).
DEFAULT_GRID_LO = -50.0
DEFAULT_GRID_HI = 50.0
DEFAULT_GRID_COUNT = 200001
DEFAULT_REFINE_ITERS = 60


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    count: int = DEFAULT_GRID_COUNT
    refine_iters: int = DEFAULT_REFINE_ITERS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("lo must be < hi")
        if self.count < 1 or self.refine_iters < 1:
            raise ValueError("count and refine_iters must be positive")


def _eval_on(objective, xs):
    vals = np.asarray(objective(xs), dtype=float)
    if vals.shape != xs.shape:
        vals = np.array([float(objective(float(x))) for x in xs])
    return vals


def grid_min_1d(objective: Callable, grid: GridSpec):
    """Dense grid scan + golden-section refinement around the best cell.

    Returns ``(argmin, min)``.  The scan alone brackets the minimizer within
    ``(hi - lo)/count``; refinement then contracts the bracket by the golden
    ratio per iteration.  Deterministic for a fixed ``GridSpec``.
    """
    xs = np.linspace(grid.lo, grid.hi, grid.count)
    vals = _eval_on(objective, xs)
    i = int(np.argmin(vals))
    best_x, best_v = float(xs[i]), float(vals[i])
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, grid.count - 1)])
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = float(objective(c))
    fd = float(objective(d))
    for _ in range(grid.refine_iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(objective(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(objective(d))
        for x, v in ((c, fc), (d, fd)):
            if v < best_v:
                best_x, best_v = x, v
    return best_x, best_v


def oracle_project_epigraph(
    xbar: float, tbar: float, p: RationalExponent, grid: GridSpec | None = None
) -> EpigraphPoint:
    """Grid-search reference for the non-convex epigraph projection.

    Uses the reduction t = |x|^p: scans ``(|x|^p - tbar)^2 + (x - xbar)^2``
    over the sign(xbar) half-line (the minimizer always lies between 0 and
    xbar) and compares against the boundary candidate (0, max(tbar, 0)).
    """
    pval = p.value
    if tbar >= abs(xbar) ** pval:
        return EpigraphPoint(float(xbar), float(tbar))
    if xbar == 0:
        return EpigraphPoint(0.0, max(float(tbar), 0.0))
    ax = abs(xbar)
    if grid is None:
        grid = GridSpec(0.0, ax)

    def reduced(u):
        return (np.abs(u) ** pval - tbar) ** 2 + (np.abs(u) - ax) ** 2

    u, val = grid_min_1d(reduced, grid)
    u = abs(u)
    boundary = xbar**2 + (max(tbar, 0.0) - tbar) ** 2
    if boundary < val:
        return EpigraphPoint(0.0, max(float(tbar), 0.0))
    return EpigraphPoint(float(np.sign(xbar)) * u, u**pval)


def oracle_prox_scalar(
    tbar: float, p: RationalExponent, w: float, grid: GridSpec | None = None
) -> float:
    """Grid-search reference for argmin_t |t|^p + (w/2)(t - tbar)^2."""
    if w <= 0:
        raise ValueError("prox weight must be positive")
    if tbar == 0:
        return 0.0
    at = abs(tbar)
    if grid is None:
        grid = GridSpec(0.0, at)

    def objective(u):
        return np.abs(u) ** p.value + 0.5 * w * (np.abs(u) - at) ** 2

    u, _ = grid_min_1d(objective, grid)
    return float(np.sign(tbar)) * abs(u)


def _apply(op, x):
    return op(x) if callable(op) else np.asarray(op) @ x


def _adjoint(op, y):
    if hasattr(op, "adjoint"):
        return op.adjoint(y)
    return np.asarray(op).T @ y


def kkt_residual_ball(y, z, U, v, delta: float) -> float:
    """First-order optimality residual for y = projection of z onto {‖Uy−v‖ ≤ δ}.

    Returns the max of the feasibility violation ``(‖Uy−v‖ − δ)+``, the
    stationarity residual ``‖y − z + ν Uᵀ(Uy−v)‖`` with the multiplier ν
    recovered by least squares (clipped at ν >= 0), and the complementarity
    product ``ν (δ − ‖Uy−v‖)+``.  Without the last term a least-squares ν can
    absorb errors at strictly interior points, so 0 would not certify
    optimality; with it, ~0 does.
    """
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    r = _apply(U, y) - np.asarray(v, float)
    rnorm = float(np.linalg.norm(r))
    feas = max(rnorm - float(delta), 0.0)
    g = _adjoint(U, r)
    gg = float(g @ g)
    nu = max(-float((y - z) @ g) / gg, 0.0) if gg > 0 else 0.0
    stat = float(np.linalg.norm(y - z + nu * g))
    comp = nu * max(float(delta) - rnorm, 0.0)
    return max(feas, stat, comp)


def fd_gradient_check(f, grad, x, h: float = 1e-5) -> float:
    """Max relative error between ``grad(x)`` and central finite differences."""
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-7, 1e-4]")
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad(x), dtype=float)
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        fd.flat[i] = (float(f(x + e)) - float(f(x - e))) / (2.0 * h)
    err = np.abs(g - fd).max()
    scale = np.abs(fd).max()
    if scale == 0.0:
        return float(err)
    return float(err / scale)


def oracle_project_hinge(z, features, labels, eps: float, solver: str | None = None):
    """Reference projection onto {y: (1/m) Σ (1 − v_j u_jᵀ y)+ <= eps}.

    Solves the lifted QP over (y, slacks) with a generic convex solver at
    tight tolerance — a route fully independent of the level-set splitting in
    :mod:`lpqn.convex_proj`.  Sized for small test instances.
    """
    import cvxpy as cp

    z = np.asarray(z, float)
    U = np.asarray(features, float)
    v = np.asarray(labels, float)
    m = U.shape[0]
    y = cp.Variable(z.size)
    xi = cp.Variable(m)
    margins = 1 - cp.multiply(v, U @ y)
    prob = cp.Problem(
        cp.Minimize(cp.sum_squares(y - z)),
        [xi >= 0, xi >= margins, cp.sum(xi) <= m * eps],
    )
    kwargs = {}
    if solver is None and "CLARABEL" in cp.installed_solvers():
        solver = "CLARABEL"
    if solver == "CLARABEL":
        kwargs = {
            "tol_gap_abs": 1e-12,
            "tol_gap_rel": 1e-12,
            "tol_feas": 1e-12,
        }
    prob.solve(solver=solver, **kwargs)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"hinge oracle QP failed: {prob.status}")
    return np.asarray(y.value, float)
