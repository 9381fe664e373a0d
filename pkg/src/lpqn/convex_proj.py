"""Euclidean projections onto the convex sets the ADMM solvers require.

Residual balls ``{y: ‖Uy − v‖ <= δ}`` (dual safeguarded Newton on a cached
SVD), entry-sampling balls (closed form), the Hankel-structured residual set
(weighted reduction to a residual ball), and the hinge-loss sublevel set
(level-set bisection with an exact-coordinate dual inner solver).

Projector objects precompute factorizations once so a solver can reuse them
every iteration; they are immutable after construction and safe to call from
multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linops import HankelShape, LinearOperator, antidiag_weights, hankel_adjoint, hankel_lift

__all__ = [
    "ProjectionError",
    "ResidualBallProjector",
    "project_residual_ball",
    "project_sampling_ball",
    "HankelResidualProjector",
    "project_hankel_residual",
    "HingeSublevelProjector",
    "project_hinge_sublevel",
    "ProjectionSpec",
]


class ProjectionError(RuntimeError):
    """Raised when a projection target set is (numerically) empty or an
    iterative projector fails to reach its tolerance.

    Attributes carry diagnostics: ``floor`` (least achievable residual) for
    ball projections, ``best`` and ``gap`` for iterative ones.
    """

    def __init__(self, message, floor=None, best=None, gap=None):
        super().__init__(message)
        self.floor = floor
        self.best = best
        self.gap = gap


def _to_dense(U):
    if isinstance(U, LinearOperator):
        return U.to_dense()
    return np.asarray(U, dtype=float)


class ResidualBallProjector:
    """Exact projection onto {y: ‖Uy − v‖ <= delta}.

    The SVD of U is computed once; each call then reduces to a scalar root
    find for the dual multiplier nu in ``y(nu) = (I + nu UᵀU)^{-1}(z + nu Uᵀv)``,
    whose residual ‖Uy(nu) − v‖ is strictly decreasing. Newton steps from the
    left (the residual equation is convex in nu) safeguarded by bisection on a
    doubling bracket.
    """

    def __init__(self, U, v, delta: float, tol: float = 1e-12):
        if delta < 0:
            raise ValueError("radius must be nonnegative")
        Ud = _to_dense(U)
        v = np.asarray(v, dtype=float)
        if Ud.shape[0] != v.size:
            raise ValueError("U and v dimensions disagree")
        P, s, Qt = np.linalg.svd(Ud, full_matrices=False)
        cut = s.max() * max(Ud.shape) * np.finfo(float).eps if s.size and s[0] > 0 else 0.0
        s = np.where(s > cut, s, 0.0)
        self.Q = Qt.T
        self.s = s
        self.s2 = s**2
        self.d = P.T @ v
        self._v_perp_sq = max(float(v @ v - self.d @ self.d), 0.0)
        zero = self.s == 0.0
        self.residual_floor = float(np.sqrt(self._v_perp_sq + np.sum(self.d[zero] ** 2)))
        self.delta = float(delta)
        self.tol = float(tol)
        self.rows, self.cols = Ud.shape

    def _solve_nu(self, a, const_sq):
        # root of g(nu) = sum a_i/(1+nu s2_i)^2 + const_sq - delta^2, g convex decreasing
        s2 = self.s2[self.s > 0]
        d2 = self.delta**2

        def g_and_deriv(nu):
            den = 1.0 + nu * s2
            gi = a / den**2
            return float(gi.sum() + const_sq - d2), float(-2.0 * (gi * s2 / den).sum())

        lo, glo = 0.0, g_and_deriv(0.0)[0]
        hi = 1.0
        for _ in range(200):
            ghi = g_and_deriv(hi)[0]
            if ghi <= 0.0:
                break
            lo, glo = hi, ghi
            hi *= 2.0
        else:
            # radius equals the residual floor up to rounding: take the limit
            return np.inf
        nu = lo
        gval, gder = glo, g_and_deriv(lo)[1]
        target = 2.0 * self.tol * d2 + 1e-300
        for _ in range(200):
            if abs(gval) <= target or (hi - lo) <= 1e-15 * hi:
                break
            step_ok = gder < 0
            nu_new = nu - gval / gder if step_ok else 0.5 * (lo + hi)
            if not (lo < nu_new < hi):
                nu_new = 0.5 * (lo + hi)
            gval, gder = g_and_deriv(nu_new)
            if gval > 0:
                lo = nu_new
            else:
                hi = nu_new
            nu = nu_new
        return nu

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        c = self.Q.T @ z
        r = self.s * c - self.d
        phi0_sq = float(r @ r) + self._v_perp_sq
        if phi0_sq <= self.delta**2:
            return z.copy()
        if self.residual_floor > self.delta * (1.0 + 1e-10) + 1e-14:
            raise ProjectionError(
                f"set is empty: least achievable residual {self.residual_floor:.6g} "
                f"exceeds radius {self.delta:.6g}",
                floor=self.residual_floor,
            )
        pos = self.s > 0
        nu = self._solve_nu(r[pos] ** 2, phi0_sq - float(r[pos] @ r[pos]))
        if np.isinf(nu):
            coef = np.where(pos, self.d / np.where(pos, self.s, 1.0), c)
        else:
            coef = (c + nu * self.s * self.d) / (1.0 + nu * self.s2)
        return z + self.Q @ (coef - c)


def project_residual_ball(z, U, v, delta: float, tol: float = 1e-12):
    """One-shot exact projection of z onto {y: ‖Uy − v‖ <= delta}."""
    return ResidualBallProjector(U, v, delta, tol)(z)


def project_sampling_ball(z, indices, b, eps: float):
    """Projection onto {y: ‖y[indices] − b‖ <= eps}; closed form.

    Unsampled entries pass through; the sampled block moves radially toward b
    (a zero residual leaves it unchanged).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    z = np.array(z, dtype=float)
    idx = np.asarray(indices, dtype=int)
    b = np.asarray(b, dtype=float)
    resid = z[idx] - b
    nr = float(np.linalg.norm(resid))
    if nr > eps:
        z[idx] = b + resid * (eps / nr)
    return z


class HankelResidualProjector:
    """Projection onto {X = Hankel(x): ‖Tx − yhat‖^2 <= eps} in Frobenius norm.

    With anti-diagonal multiplicities w and means zbar of the input matrix,
    ‖Hankel(x) − Z‖_F^2 = Σ_k w_k (x_k − zbar_k)^2 + const, so the problem is
    a residual-ball projection in the coordinates sqrt(w) ⊙ x.
    """

    def __init__(self, T, yhat, eps: float, shape: HankelShape, tol: float = 1e-12):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        self.shape = shape
        self.weights = antidiag_weights(shape)
        self._sqw = np.sqrt(self.weights)
        Td = _to_dense(T)
        if Td.shape[1] != shape.n:
            raise ValueError("T column count must equal the Hankel generator length")
        self._ball = ResidualBallProjector(Td / self._sqw[None, :], yhat, float(np.sqrt(eps)), tol)

    @property
    def residual_floor_sq(self) -> float:
        """Least achievable ‖Tx − yhat‖^2 (the set is empty when above eps)."""
        return self._ball.residual_floor**2

    def project(self, Z):
        zbar = hankel_adjoint(Z, self.shape) / self.weights
        xt = self._ball(self._sqw * zbar)
        x = xt / self._sqw
        return x, hankel_lift(x, self.shape)

    def __call__(self, Z):
        return self.project(Z)[1]


def project_hankel_residual(Z, T, yhat, eps: float, shape: HankelShape, tol: float = 1e-12):
    """One-shot Hankel-residual projection; returns (x, Hankel(x))."""
    return HankelResidualProjector(T, yhat, eps, shape, tol).project(Z)


class HingeSublevelProjector:
    """Projection onto {y: (1/m) Σ_j (1 − v_j u_jᵀ y)+ <= eps}.

    Level-set method: the projection is ``argmin ½‖y − z‖² + nu * hinge(y)``
    at the multiplier nu >= 0 driving the hinge value to eps, found by
    bisection on a doubling bracket.  Each inner problem is solved through its
    box-constrained dual (exact cyclic coordinate updates on the Gram matrix,
    warm-started across the bisection), to duality gap ``0.5 * tol^2`` so the
    returned point is within ``tol`` of the exact projection.
    """

    def __init__(self, features, labels, eps: float, tol: float = 1e-8, max_inner: int = 10000):
        U = np.asarray(features, dtype=float)
        v = np.asarray(labels, dtype=float)
        if U.ndim != 2 or v.shape != (U.shape[0],):
            raise ValueError("features must be (m, n) with one label per row")
        if not np.all(np.isin(v, (-1.0, 1.0))):
            raise ValueError("labels must be +-1")
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.A = v[:, None] * U
        self.m, self.n = self.A.shape
        self.G = self.A @ self.A.T
        self.diag = np.diag(self.G).copy()
        self.eps = float(eps)
        self.tol = float(tol)
        self.max_inner = int(max_inner)
        self._gap_tol = max(0.5 * tol * tol, 1e-15)
        self._cap_gap = 1e-8

    def hinge(self, y) -> float:
        return float(np.mean(np.maximum(1.0 - self.A @ np.asarray(y, float), 0.0)))

    def _inner(self, nu, c, alpha):
        """Maximize alphaᵀc − ½ alphaᵀG alpha over [0, nu/m]^m by exact cyclic
        coordinate ascent; returns (alpha, hinge value, gap, converged).

        A full sweep that moves no coordinate is a global optimum (the box is
        coordinate-separable and the objective is concave quadratic), which
        certifies convergence even when the measured duality gap sits at the
        floating-point noise floor.
        """
        ub = nu / self.m
        alpha = np.clip(alpha, 0.0, ub)
        Ga = self.G @ alpha
        m = self.m
        gap = np.inf
        dual_prev = -np.inf
        for _ in range(self.max_inner):
            moved = 0.0
            alpha_start = alpha.copy()
            for j in range(m):
                gj = Ga[j] - c[j]
                if self.diag[j] > 0:
                    aj = min(max(alpha[j] - gj / self.diag[j], 0.0), ub)
                else:
                    aj = ub if c[j] > 0 else 0.0
                delta = aj - alpha[j]
                if delta != 0.0:
                    alpha[j] = aj
                    Ga += delta * self.G[j]
                    moved = max(moved, abs(delta))
            if moved > 0.0:
                # exact maximization along the sweep displacement kills the
                # zigzag crawl of cyclic updates on the rank-deficient Gram
                d = alpha - alpha_start
                slope = float(d @ (c - Ga))
                if slope > 0.0:
                    Gd = self.G @ d
                    dGd = float(d @ Gd)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        steps = np.where(d > 0, (ub - alpha) / d, np.where(d < 0, -alpha / d, np.inf))
                    gmax = float(np.min(steps))
                    gamma = min(slope / dGd, gmax) if dGd > 0 else gmax
                    if np.isfinite(gamma) and gamma > 0:
                        alpha = np.clip(alpha + gamma * d, 0.0, ub)
                        Ga = Ga + gamma * Gd
            hinge_val = float(np.maximum(c - Ga, 0.0).mean())
            primal = 0.5 * float(alpha @ Ga) + nu * hinge_val
            dual = float(alpha @ c) - 0.5 * float(alpha @ Ga)
            gap = primal - dual
            # ascent is monotone in the dual, so no measurable dual progress
            # means we are at the floating-point optimum for this nu
            stalled = moved == 0.0 or dual - dual_prev <= 1e-15 * (1.0 + abs(dual))
            dual_prev = dual
            if gap <= self._gap_tol * (1.0 + abs(primal)) or stalled:
                return alpha, hinge_val, gap, True
        # iteration cap: accept the documented default inexactness, complain
        # only when the gap is genuinely unconverged
        hinge_val = float(np.maximum(c - Ga, 0.0).mean())
        if gap <= self._cap_gap * (1.0 + abs(primal)):
            return alpha, hinge_val, gap, True
        return alpha, hinge_val, gap, False

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.hinge(z) <= self.eps:
            return z.copy()
        c = 1.0 - self.A @ z
        alpha = np.zeros(self.m)
        nu_lo, nu_hi = 0.0, 1.0
        hinge_prev, hinge_hi = np.inf, np.inf
        plateaus = 0
        for _ in range(80):
            alpha, hinge_hi, gap, ok = self._inner(nu_hi, c, alpha)
            if not ok:
                raise ProjectionError(
                    "hinge projection: inner iteration cap exhausted",
                    best=z + self.A.T @ alpha,
                    gap=gap,
                )
            if hinge_hi <= self.eps:
                break
            # the hinge value saturating above eps means eps undercuts the
            # hinge infimum, i.e. the sublevel set is empty
            plateaus = plateaus + 1 if hinge_hi >= hinge_prev - 1e-10 * (1.0 + hinge_prev) else 0
            hinge_prev = hinge_hi
            if plateaus >= 3:
                raise ProjectionError(
                    f"hinge projection: level {self.eps:.6g} appears to undercut the "
                    f"hinge infimum (~{hinge_hi:.6g}); the sublevel set may be empty",
                    best=z + self.A.T @ alpha,
                    gap=hinge_hi - self.eps,
                )
            nu_lo, nu_hi = nu_hi, 2.0 * nu_hi
        else:
            raise ProjectionError(
                "hinge projection: no multiplier reaches the target level; "
                "the sublevel set may be empty",
                best=z + self.A.T @ alpha,
                gap=hinge_hi - self.eps,
            )
        alpha_hi = alpha.copy()
        alpha_lo = np.zeros(self.m) if nu_lo == 0.0 else None
        while nu_hi - nu_lo > 1e-14 * nu_hi:
            if alpha_lo is not None:
                # both bracket ends pin the projection within their y-distance
                ydist = float(np.linalg.norm(self.A.T @ (alpha_hi - alpha_lo)))
                if ydist <= 0.3 * self.tol:
                    break
            mid = 0.5 * (nu_lo + nu_hi)
            alpha, hinge_mid, gap, ok = self._inner(mid, c, alpha)
            if not ok:
                raise ProjectionError(
                    "hinge projection: inner iteration cap exhausted",
                    best=z + self.A.T @ alpha_hi,
                    gap=gap,
                )
            if hinge_mid <= self.eps:
                nu_hi = mid
                alpha_hi = alpha.copy()
            else:
                nu_lo = mid
                alpha_lo = alpha.copy()
        return z + self.A.T @ alpha_hi


def project_hinge_sublevel(z, features, labels, eps: float, tol: float = 1e-8):
    """One-shot hinge-sublevel projection (see :class:`HingeSublevelProjector`)."""
    return HingeSublevelProjector(features, labels, eps, tol)(z)


@dataclass
class ProjectionSpec:
    """Declarative description of a convex projection, for configs and CLIs.

    ``kind`` is one of residual_ball, sampling_ball, hankel_residual,
    hinge_sublevel, custom; ``params`` holds the kind-specific arguments.
    """

    kind: str
    params: dict = field(default_factory=dict)
    tol: float = 1e-8

    def build(self) -> Callable:
        p = self.params
        if self.kind == "residual_ball":
            return ResidualBallProjector(p["U"], p["v"], p["delta"], tol=min(self.tol, 1e-12))
        if self.kind == "sampling_ball":
            return lambda z: project_sampling_ball(z, p["indices"], p["b"], p["eps"])
        if self.kind == "hankel_residual":
            return HankelResidualProjector(
                p["T"], p["yhat"], p["eps"], p["shape"], tol=min(self.tol, 1e-12)
            )
        if self.kind == "hinge_sublevel":
            return HingeSublevelProjector(p["features"], p["labels"], p["eps"], tol=self.tol)
        if self.kind == "custom":
            return p["projector"]
        raise ValueError(f"unknown projection kind {self.kind!r}")
