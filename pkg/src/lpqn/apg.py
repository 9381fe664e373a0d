"""Non-monotone accelerated proximal gradient for penalized lp recovery.

Minimizes F(x) = ‖x‖_p^p + (mu/2) f(x) with f(x) = ‖Ax − b‖² − eps.  The
extrapolated point is accepted only when its objective does not exceed the
maximum of the last l recorded objective values; the proximal step is exact
(elementwise polynomial-root prox).  A FISTA l1 solver with the same stopping
rule provides both the comparison baseline and the default initialization.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linops import LinearOperator, spectral_norm
from .scalar_core import RationalExponent, prox_batch, soft_threshold

__all__ = ["SmoothObjective", "ApgConfig", "ApgReport", "objective_F", "apg_solve", "fista_l1_solve"]


@dataclass
class SmoothObjective:
    """The smooth part f(x) = ‖Ax − b‖² − eps and its gradient data.

    ``lip`` is the Lipschitz constant of ∇f; the valid bound for this f is
    2 σ_max(A)², computed by power iteration when not supplied.  ``eps`` only
    shifts F by a constant and defaults to 0 for penalized solves.
    """

    A: LinearOperator
    b: np.ndarray
    eps: float = 0.0
    lip: Optional[float] = None

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.shape != (self.A.rows,):
            raise ValueError("b must match the operator row count")
        if self.lip is None:
            self.lip = 2.0 * spectral_norm(self.A) ** 2
        if self.lip <= 0:
            raise ValueError("Lipschitz constant must be positive")

    def value(self, x) -> float:
        r = self.A.apply(x) - self.b
        return float(r @ r) - self.eps

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.A.adjoint(self.A.apply(x) - self.b)


@dataclass
class ApgConfig:
    mu: float
    l: int = 5
    max_iters: int = 10000
    rel_tol: float = 1e-5
    p: RationalExponent = field(default_factory=lambda: RationalExponent(1, 2))

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.l < 1:
            raise ValueError("objective memory l must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class ApgReport:
    x: np.ndarray
    iterations: int
    f_trace: np.ndarray          # F(x^k), k = 1, 2, ...
    fy_trace: np.ndarray         # F(y^k) at each extrapolation
    delta_trace: np.ndarray      # memory maxima the extrapolations were tested against
    accepted: np.ndarray         # whether y^k was taken as the gradient point
    sparsity: int
    wall_time_s: float
    seed: Optional[int] = None
    converged: bool = False


def objective_F(x, cfg: ApgConfig, obj: SmoothObjective) -> float:
    """F(x) = Σ|x_i|^p + (mu/2)(‖Ax − b‖² − eps)."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(np.abs(x) ** cfg.p.value)) + 0.5 * cfg.mu * obj.value(x)


def _rel_change(x_new, x_old) -> float:
    denom = float(np.linalg.norm(x_old))
    diff = float(np.linalg.norm(x_new - x_old))
    if denom == 0.0:
        return 0.0 if diff == 0.0 else np.inf
    return diff / denom


def apg_solve(
    obj: SmoothObjective,
    cfg: ApgConfig,
    x0: Optional[np.ndarray] = None,
    x1: Optional[np.ndarray] = None,
    seed: Optional[int] = None,
    zero_threshold: float = 1e-6,
) -> ApgReport:
    """Run the non-monotone APG iteration.

    ``x0`` defaults to zero and ``x1`` to the FISTA l1 solution of the same
    instance.  Iteration k extrapolates with weight (k-1)/(k+2), falls back to
    x^k when F at the extrapolation exceeds the max of the last l objective
    values, then applies the exact elementwise prox with weight mu*L/2.
    Terminates at relative change <= rel_tol between consecutive iterates.
    """
    n = obj.A.cols
    x_prev = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    x = fista_l1_solve(obj, cfg.mu, cfg.max_iters, cfg.rel_tol) if x1 is None else np.asarray(x1, dtype=float).copy()
    L = obj.lip
    w = cfg.mu * L / 2.0
    history = deque([objective_F(x, cfg, obj)], maxlen=cfg.l)
    f_trace = [history[0]]
    fy_trace = []
    delta_trace = []
    accepted = []
    converged = False
    t0 = time.perf_counter()
    k = 1
    while k <= cfg.max_iters:
        y = x + ((k - 1.0) / (k + 2.0)) * (x - x_prev)
        delta = max(history)
        fy = objective_F(y, cfg, obj)
        take_y = fy <= delta
        v = y if take_y else x
        fy_trace.append(fy)
        delta_trace.append(delta)
        accepted.append(take_y)
        xbar = v - obj.gradient(v) / L
        x_new = prox_batch(xbar, cfg.p, w)
        f_new = objective_F(x_new, cfg, obj)
        if not np.isfinite(f_new):
            raise RuntimeError(f"non-finite objective at APG iteration {k}")
        history.append(f_new)
        f_trace.append(f_new)
        rel = _rel_change(x_new, x)
        x_prev, x = x, x_new
        k += 1
        if rel <= cfg.rel_tol:
            converged = True
            break
    return ApgReport(
        x=x,
        iterations=k - 1,
        f_trace=np.asarray(f_trace),
        fy_trace=np.asarray(fy_trace),
        delta_trace=np.asarray(delta_trace),
        accepted=np.asarray(accepted, dtype=bool),
        sparsity=int(np.count_nonzero(np.abs(x) > zero_threshold)),
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        converged=converged,
    )


def fista_l1_solve(
    obj: SmoothObjective,
    mu: float,
    max_iters: int = 10000,
    rel_tol: float = 1e-5,
    full_output: bool = False,
):
    """FISTA on ‖x‖_1 + (mu/2) f(x) with the same stopping rule as the APG.

    The gradient step matches the APG step x - ∇f/L; the prox is soft
    thresholding at weight mu*L/2 (shrinkage by 2/(mu*L)).  Returns the
    solution vector, or (x, iterations, objective trace) with full_output.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    L = obj.lip
    w = mu * L / 2.0
    n = obj.A.cols
    x = np.zeros(n)
    yv = x.copy()
    tk = 1.0
    trace = []
    iters = 0
    for k in range(1, max_iters + 1):
        x_new = soft_threshold(yv - obj.gradient(yv) / L, w)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        yv = x_new + ((tk - 1.0) / t_new) * (x_new - x)
        rel = _rel_change(x_new, x)
        x, tk = x_new, t_new
        iters = k
        if full_output:
            trace.append(float(np.sum(np.abs(x))) + 0.5 * mu * obj.value(x))
        if rel <= rel_tol:
            break
    if full_output:
        return x, iters, np.asarray(trace)
    return x
