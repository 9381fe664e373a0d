"""Two-block ADMM for lp quasi-norm minimization over a convex set.

Minimizes sum_i |x_i|^p subject to x in V, where V enters only through a
Euclidean projection callback.  The epigraph reformulation splits the iterate
into (x, t) (projected coordinatewise onto {t >= |x|^p}) and (y, z) (convex
projection plus a closed-form shift); duals ascend with step rho.  Setting
``p = None`` in the config switches the coordinate step to the p = 1 closed
form, which is the internal l1 baseline used throughout the benchmarks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .convex_proj import ProjectionSpec
from .scalar_core import RationalExponent, project_epigraph_batch, project_epigraph_l1_batch

__all__ = ["AdmmConfig", "AdmmState", "SolveReport", "svr_solve", "sparsity_count"]


@dataclass
class AdmmConfig:
    """Knobs of the vector ADMM.

    ``p = None`` selects the l1 baseline path.  ``stop_tol = None`` runs the
    full ``max_iters`` budget (the benchmark default); otherwise iteration
    stops once both primal residuals fall below ``stop_tol``.  ``adaptive_rho``
    enables standard residual balancing and is off for all acceptance runs.
    """

    rho: float = 1.0
    max_iters: int = 1000
    zero_threshold: float = 1e-6
    p: Optional[RationalExponent] = field(default_factory=lambda: RationalExponent(1, 2))
    stop_tol: Optional[float] = None
    adaptive_rho: bool = False

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.zero_threshold <= 0:
            raise ValueError("zero_threshold must be positive")


@dataclass
class AdmmState:
    """The six-tuple of ADMM iterates (x, t) / (y, z) and duals (lam, theta)."""

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    theta: np.ndarray

    def copy(self) -> "AdmmState":
        return AdmmState(*(v.copy() for v in (self.x, self.t, self.y, self.z, self.lam, self.theta)))


@dataclass
class SolveReport:
    """Outcome of a solver run.

    ``x`` is the best-feasibility iterate (least max primal residual), not
    necessarily the last one: the non-convex ADMM may oscillate.
    """

    x: np.ndarray
    t: np.ndarray
    iterations: int
    resid_x: np.ndarray
    resid_t: np.ndarray
    sparsity: int
    wall_time_s: float
    seed: Optional[int] = None
    converged: bool = False
    best_iter: int = -1
    states: Optional[list] = None


def sparsity_count(x, threshold: float) -> int:
    """Number of entries with |x_i| > threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return int(np.count_nonzero(np.abs(np.asarray(x)) > threshold))


def _resolve_projector(projector) -> Callable:
    if isinstance(projector, ProjectionSpec):
        return projector.build()
    if callable(projector):
        return projector
    raise TypeError("projector must be callable or a ProjectionSpec")


def svr_solve(
    projector,
    n: int,
    config: AdmmConfig,
    init: Optional[AdmmState] = None,
    seed: Optional[int] = None,
    record_states: bool = False,
) -> SolveReport:
    """Run the two-block ADMM on an n-dimensional instance.

    Parameters
    ----------
    projector : callable or ProjectionSpec
        Euclidean projection onto the convex set V.
    n : int
        Problem dimension.
    config : AdmmConfig
    init : AdmmState, optional
        Warm start; defaults to all-zeros (y, z, duals).
    seed : int, optional
        Recorded in the report only; the iteration itself is deterministic.
    record_states : bool
        Keep a per-iteration copy of the full state (tests only; memory heavy).

    Raises ``RuntimeError`` on non-finite iterates; projection infeasibility
    propagates as :class:`~lpqn.convex_proj.ProjectionError`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    project = _resolve_projector(projector)
    rho = config.rho
    if init is not None:
        y, z, lam, theta = init.y.copy(), init.z.copy(), init.lam.copy(), init.theta.copy()
    else:
        y = np.zeros(n)
        z = np.zeros(n)
        lam = np.zeros(n)
        theta = np.zeros(n)
    x = y.copy()
    t = z.copy()
    ones = np.ones(n)
    resid_x = np.empty(config.max_iters)
    resid_t = np.empty(config.max_iters)
    states = [] if record_states else None
    best = (np.inf, -1, x, t)
    converged = False
    t0 = time.perf_counter()
    k = 0
    y_prev = y.copy()
    for k in range(config.max_iters):
        if config.p is None:
            x, t = project_epigraph_l1_batch(y - lam / rho, z - theta / rho)
        else:
            x, t = project_epigraph_batch(y - lam / rho, z - theta / rho, config.p)
        y_prev, y = y, project(x + lam / rho)
        z = t + (theta - ones) / rho
        lam = lam + rho * (x - y)
        theta = theta + rho * (t - z)
        rx = float(np.linalg.norm(x - y))
        rt = float(np.linalg.norm(t - z))
        resid_x[k] = rx
        resid_t[k] = rt
        if not (np.isfinite(rx) and np.isfinite(rt)):
            raise RuntimeError(f"non-finite iterate at ADMM iteration {k}")
        if max(rx, rt) < best[0]:
            best = (max(rx, rt), k, x.copy(), t.copy())
        if record_states:
            states.append(AdmmState(x, t, y, z, lam, theta).copy())
        if config.adaptive_rho and k > 0:
            # residual balancing; the dual residual of the y-block is rho * Δy
            r_dual = rho * float(np.linalg.norm(y - y_prev))
            if rx > 10 * r_dual:
                rho *= 2.0
            elif r_dual > 10 * rx:
                rho /= 2.0
        if config.stop_tol is not None and rx <= config.stop_tol and rt <= config.stop_tol:
            converged = True
            break
    iters = k + 1
    return SolveReport(
        x=best[2],
        t=best[3],
        iterations=iters,
        resid_x=resid_x[:iters].copy(),
        resid_t=resid_t[:iters].copy(),
        sparsity=sparsity_count(best[2], config.zero_threshold),
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        converged=converged,
        best_iter=best[1],
        states=states,
    )
