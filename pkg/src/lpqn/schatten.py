"""Schatten-p quasi-norm rank minimization by two-block ADMM.

The (X, t) block minimizes ``‖X − Xbar‖_F² + ‖t − tbar‖²`` over per-singular-
value epigraph constraints; aligning the singular bases of X with those of
Xbar (the trace inequality is tight exactly then) collapses it to the scalar
epigraph projection applied to each (singular value, tbar_i) pair.  The rest
of the loop mirrors the vector solver with a Frobenius-nearest convex
projection for Y.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .admm import AdmmConfig, _resolve_projector
from .scalar_core import RationalExponent, project_epigraph_batch, project_epigraph_l1_batch

__all__ = [
    "MatrixSolveReport",
    "matrix_xt_update",
    "rankmin_solve",
    "nuclear_baseline_solve",
    "rank_estimate",
]


@dataclass
class MatrixSolveReport:
    """Outcome of a matrix ADMM run; ``X`` is the best-feasibility iterate."""

    X: np.ndarray
    t: np.ndarray
    iterations: int
    resid_x: np.ndarray
    resid_t: np.ndarray
    rank: int
    wall_time_s: float
    seed: Optional[int] = None
    converged: bool = False
    best_iter: int = -1


def _canonical_svd(X):
    """Thin SVD with descending singular values and a fixed sign convention.

    The largest-magnitude entry of each left singular vector is made
    nonnegative so repeated runs produce identical traces.
    """
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    flip = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])])
    flip = np.where(flip == 0, 1.0, flip)
    return U * flip, s, Vt * flip[:, None]


def matrix_xt_update(Xbar, tbar, p: Optional[RationalExponent]):
    """Joint minimizer of ‖X − Xbar‖_F² + ‖t − tbar‖² s.t. σ_i(X)^p <= t_i.

    ``tbar`` coordinates pair with singular values in descending-σ order.
    ``p = None`` applies the p = 1 closed form per value (nuclear baseline).
    """
    Xbar = np.asarray(Xbar, dtype=float)
    if not np.all(np.isfinite(Xbar)):
        raise ValueError("Xbar must be finite")
    tbar = np.asarray(tbar, dtype=float)
    U, sing, Vt = _canonical_svd(Xbar)
    if tbar.shape != sing.shape:
        raise ValueError(f"tbar must have length {sing.size}")
    if p is None:
        sig, t = project_epigraph_l1_batch(sing, tbar)
    else:
        sig, t = project_epigraph_batch(sing, tbar, p)
    return (U * sig) @ Vt, t


def rank_estimate(X, threshold: float) -> int:
    """Number of singular values above threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return int(np.count_nonzero(np.linalg.svd(np.asarray(X, float), compute_uv=False) > threshold))


def rankmin_solve(
    projector,
    m: int,
    n: int,
    config: AdmmConfig,
    seed: Optional[int] = None,
    rank_threshold: float = 1e-4,
) -> MatrixSolveReport:
    """Two-block ADMM for min Σ σ_i(X)^p over X in M.

    ``projector`` maps an (m, n) matrix to its Frobenius-nearest point of M.
    The report's rank is measured on the best-feasibility iterate at
    ``rank_threshold``.
    """
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    project = _resolve_projector(projector)
    rho = config.rho
    L = min(m, n)
    Y = np.zeros((m, n))
    Lam = np.zeros((m, n))
    z = np.zeros(L)
    theta = np.zeros(L)
    ones = np.ones(L)
    X = Y.copy()
    t = z.copy()
    resid_x = np.empty(config.max_iters)
    resid_t = np.empty(config.max_iters)
    best = (np.inf, -1, X, t)
    converged = False
    t0 = time.perf_counter()
    k = 0
    for k in range(config.max_iters):
        X, t = matrix_xt_update(Y - Lam / rho, z - theta / rho, config.p)
        Y = project(X + Lam / rho)
        z = t + (theta - ones) / rho
        Lam = Lam + rho * (X - Y)
        theta = theta + rho * (t - z)
        rx = float(np.linalg.norm(X - Y))
        rt = float(np.linalg.norm(t - z))
        resid_x[k] = rx
        resid_t[k] = rt
        if not (np.isfinite(rx) and np.isfinite(rt)):
            raise RuntimeError(f"non-finite iterate at ADMM iteration {k}")
        if max(rx, rt) < best[0]:
            best = (max(rx, rt), k, X.copy(), t.copy())
        if config.stop_tol is not None and rx <= config.stop_tol and rt <= config.stop_tol:
            converged = True
            break
    iters = k + 1
    return MatrixSolveReport(
        X=best[2],
        t=best[3],
        iterations=iters,
        resid_x=resid_x[:iters].copy(),
        resid_t=resid_t[:iters].copy(),
        rank=rank_estimate(best[2], rank_threshold),
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        converged=converged,
        best_iter=best[1],
    )


def nuclear_baseline_solve(projector, m, n, config: AdmmConfig, **kwargs) -> MatrixSolveReport:
    """Identical loop with the p = 1 per-singular-value closed form."""
    cfg = AdmmConfig(
        rho=config.rho,
        max_iters=config.max_iters,
        zero_threshold=config.zero_threshold,
        p=None,
        stop_tol=config.stop_tol,
        adaptive_rho=config.adaptive_rho,
    )
    return rankmin_solve(projector, m, n, cfg, **kwargs)
