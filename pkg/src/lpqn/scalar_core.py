"""Exact scalar routines shared by all solvers.

Projection onto the scalar epigraph set ``{(x, t): t >= |x|^p}`` for rational
p = s/q in (0, 1), the exact scalar prox of ``|t|^p``, their p = 1 closed-form
counterparts, and the real-root finder they all reduce to.

Every operation here is a pure function of its arguments and safe to call
concurrently; the ``*_batch`` variants vectorize over coordinates so solvers
can update all entries of an iterate in one shot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "RationalExponent",
    "EpigraphPoint",
    "real_nonneg_roots",
    "project_epigraph",
    "project_epigraph_batch",
    "prox_scalar",
    "prox_batch",
    "project_epigraph_l1",
    "project_epigraph_l1_batch",
    "soft_threshold",
]

DEFAULT_ROOT_TOL = 1e-12
FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class RationalExponent:
    """Exponent p = s/q in (0, 1) as a reduced integer pair.

    The pair drives the degree (2q) of the polynomials behind the epigraph
    projection and the scalar prox, so it is kept exact instead of a float.
    """

    s: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.s, int) and isinstance(self.q, int)):
            raise TypeError("s and q must be integers")
        if self.s <= 0 or self.q <= 0:
            raise ValueError("s and q must be positive")
        if self.s >= self.q:
            raise ValueError(f"p = {self.s}/{self.q} must satisfy 0 < p < 1")
        if math.gcd(self.s, self.q) != 1:
            raise ValueError(f"{self.s}/{self.q} is not in lowest terms")

    @property
    def value(self) -> float:
        return self.s / self.q

    @classmethod
    def parse(cls, text: str) -> "RationalExponent":
        """Parse 's/q' (e.g. '1/2') into a RationalExponent."""
        parts = str(text).split("/")
        if len(parts) != 2:
            raise ValueError(f"expected 's/q', got {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def __str__(self):
        return f"{self.s}/{self.q}"


class EpigraphPoint(NamedTuple):
    """A scalar pair (x, t) relative to the set {(x, t): t >= |x|^p}."""

    x: float
    t: float


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise ValueError("inputs must be finite")


def _companion_root_candidates(coeffs: np.ndarray) -> np.ndarray:
    """Real nonnegative root candidates of a batch of monic polynomials.

    ``coeffs`` has shape (B, d+1), highest degree first, leading column 1.
    Returns shape (B, d) with NaN in slots that are not (close to) real
    nonnegative roots.  Candidates are polished with a few safeguarded Newton
    steps; a polished value is kept only if it does not worsen the residual.
    """
    B, m = coeffs.shape
    d = m - 1
    comp = np.zeros((B, d, d))
    comp[:, 0, :] = -coeffs[:, 1:]
    if d > 1:
        idx = np.arange(d - 1)
        comp[:, idx + 1, idx] = 1.0
    ev = np.linalg.eigvals(comp)
    near_real = np.abs(ev.imag) <= 1e-6 * (1.0 + np.abs(ev.real))
    r = np.where(near_real, ev.real, np.nan)

    def horner(x):
        pv = np.zeros_like(x)
        dv = np.zeros_like(x)
        for c in coeffs.T:
            dv = dv * x + pv
            pv = pv * x + c[:, None]
        return pv, dv

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        r_pol = r
        for _ in range(3):
            pv, dv = horner(r_pol)
            step = np.where(dv != 0, pv / np.where(dv != 0, dv, 1.0), 0.0)
            # keep double-root stalls from launching the iterate far away
            step = np.clip(step, -0.5 * (1.0 + np.abs(r_pol)), 0.5 * (1.0 + np.abs(r_pol)))
            r_pol = r_pol - step
        res0, _ = horner(r)
        res1, _ = horner(r_pol)
        r = np.where(np.abs(res1) <= np.abs(res0), r_pol, r)
        r = np.where(r >= -1e-9 * (1.0 + np.abs(r)), np.maximum(r, 0.0), np.nan)
    return r


def real_nonneg_roots(coefficients: Sequence[float], tol: float = DEFAULT_ROOT_TOL) -> np.ndarray:
    """All real nonnegative roots of a polynomial, sorted ascending.

    Parameters
    ----------
    coefficients : sequence of float
        Highest degree first, as for ``numpy.roots``.
    tol : float
        Acceptance tolerance: a candidate r is kept when
        ``|poly(r)| <= tol * (1 + max|coeff|)``; roots closer than roughly
        ``tol`` are deduplicated.

    Roots are computed from companion-matrix eigenvalues followed by a short
    Newton polish, which is robust for the degree <= 32 polynomials produced
    by the projection and prox routines.
    """
    c = np.atleast_1d(np.asarray(coefficients, dtype=float))
    _check_finite(c)
    if c.ndim != 1:
        raise ValueError("coefficients must be one-dimensional")
    if c.size == 0 or not np.any(c):
        raise ValueError("identically zero polynomial")
    c = c[int(np.argmax(c != 0)):]
    if c.size == 1:
        return np.empty(0)
    scale = 1.0 + float(np.abs(c).max())
    nz = np.nonzero(c)[0]
    n_trailing = c.size - 1 - nz[-1]
    roots = [0.0] if n_trailing > 0 else []
    c_red = c[: nz[-1] + 1]
    if c_red.size > 1:
        cand = _companion_root_candidates((c_red / c_red[0])[None, :])[0]
        cand = cand[np.isfinite(cand)]
        if cand.size:
            resid = np.abs(np.polyval(c, cand))
            roots.extend(cand[resid <= tol * scale].tolist())
    roots.sort()
    out = []
    for r in roots:
        if not out or r - out[-1] > tol * (1.0 + abs(r)):
            out.append(r)
    return np.asarray(out)


def _select_candidates(xc, tc, obj, x0, t0, obj0):
    """Pick per row the candidate of least objective, ties toward smaller x.

    ``xc/tc/obj`` are (B, k) root candidates (NaN objective = invalid) and
    ``x0/t0/obj0`` the always-valid fallback column.
    """
    obj = np.where(np.isfinite(obj), obj, np.inf)
    xs = np.concatenate([xc, x0[:, None]], axis=1)
    ts = np.concatenate([tc, t0[:, None]], axis=1)
    objs = np.concatenate([obj, obj0[:, None]], axis=1)
    best = objs.min(axis=1, keepdims=True)
    x_masked = np.where(objs == best, xs, np.inf)
    col = np.argmin(x_masked, axis=1)
    rows = np.arange(xs.shape[0])
    return xs[rows, col], ts[rows, col]


def project_epigraph_batch(xbar, tbar, p: RationalExponent):
    """Elementwise Euclidean projection onto {(x, t): t >= |x|^p}.

    Returns arrays (x, t) of the broadcast shape of the inputs.  Feasible
    pairs are returned unchanged; for xbar = 0 the projection is
    (0, max(tbar, 0)); otherwise the global minimizer is selected among the
    nonnegative real roots of the degree-2q optimality polynomial plus the
    boundary candidate at x = 0.
    """
    xb, tb = np.broadcast_arrays(np.asarray(xbar, float), np.asarray(tbar, float))
    shape = xb.shape
    xb = xb.ravel().copy()
    tb = tb.ravel().copy()
    s, q, pval = p.s, p.q, p.value
    ax = np.abs(xb)
    feas = tb >= ax**pval
    x_out = np.where(feas, xb, 0.0)
    t_out = np.where(feas, tb, np.maximum(tb, 0.0))
    todo = ~feas & (ax > 0)
    if np.any(todo):
        axr = ax[todo]
        tbr = tb[todo]
        B = axr.size
        # optimality polynomial a^{2q} + (s/q)(a^{2s} - tbar a^s) - |xbar| a^q,
        # divided through by the structural a^s factor (degree 2q - s)
        deg = 2 * q - s
        C = np.zeros((B, deg + 1))
        C[:, 0] = 1.0
        C[:, deg - s] += s / q
        C[:, deg] += -(s / q) * tbr
        C[:, deg - (q - s)] += -axr
        r = _companion_root_candidates(C)
        with np.errstate(invalid="ignore"):
            xc = r**q
            tc = r**s
            obj = (xc - axr[:, None]) ** 2 + (tc - tbr[:, None]) ** 2
        t0 = np.maximum(tbr, 0.0)
        obj0 = axr**2 + (t0 - tbr) ** 2
        xw, tw = _select_candidates(xc, tc, obj, np.zeros(B), t0, obj0)
        x_out[todo] = np.sign(xb[todo]) * xw + 0.0  # +0.0 canonicalizes -0.0
        t_out[todo] = tw
    return x_out.reshape(shape), t_out.reshape(shape)


def project_epigraph(xbar: float, tbar: float, p: RationalExponent) -> EpigraphPoint:
    """Project a single (xbar, tbar) onto {(x, t): t >= |x|^p}, p = s/q < 1.

    The output is a global minimizer of ``(x - xbar)^2 + (t - tbar)^2`` over
    the epigraph set; on infeasible inputs with an interior winner it lands
    exactly on the boundary t = |x|^p with sign(x) = sign(xbar).
    """
    _check_finite(xbar, tbar)
    x, t = project_epigraph_batch(xbar, tbar, p)
    return EpigraphPoint(float(x), float(t))


def prox_batch(tbar, p: RationalExponent, w):
    """Elementwise exact prox: argmin_t |t|^p + (w/2)(t - tbar)^2.

    ``w`` may be a scalar or an array broadcastable against ``tbar``; all
    entries must be positive.
    """
    tb = np.asarray(tbar, dtype=float)
    wv = np.asarray(w, dtype=float)
    if np.any(wv <= 0):
        raise ValueError("prox weight must be positive")
    tb, wv = np.broadcast_arrays(tb, wv)
    shape = tb.shape
    tb = tb.ravel()
    wv = wv.ravel()
    s, q, pval = p.s, p.q, p.value
    at = np.abs(tb)
    out = np.zeros_like(tb)
    todo = at > 0
    if np.any(todo):
        atr = at[todo]
        wr = wv[todo]
        B = atr.size
        # stationarity polynomial a^{2q} - tbar a^q + (s/(q w)) a^s, divided
        # through by a^s (degree 2q - s)
        deg = 2 * q - s
        C = np.zeros((B, deg + 1))
        C[:, 0] = 1.0
        C[:, deg - (q - s)] += -atr
        C[:, deg] += s / (q * wr)
        r = _companion_root_candidates(C)
        with np.errstate(invalid="ignore"):
            tc = r**q
            obj = tc**pval + 0.5 * wr[:, None] * (tc - atr[:, None]) ** 2
        zero = np.zeros(B)
        obj0 = 0.5 * wr * atr**2
        tw, _ = _select_candidates(tc, tc, obj, zero, zero, obj0)
        out[todo] = np.sign(tb[todo]) * tw
    return out.reshape(shape)


def prox_scalar(tbar: float, p: RationalExponent, w: float) -> float:
    """Exact scalar prox of |t|^p: global minimizer of |t|^p + (w/2)(t - tbar)^2.

    All nonnegative stationary points (roots of the degree-2q polynomial) and
    t = 0 are compared by objective value; the paper-style "smallest positive
    root" shortcut is wrong in the thresholding regime where 0 beats every
    stationary point.
    """
    _check_finite(tbar)
    return float(prox_batch(tbar, p, w))


def project_epigraph_l1_batch(xbar, tbar):
    """Elementwise exact Euclidean projection onto {(x, t): t >= |x|}."""
    xb, tb = np.broadcast_arrays(np.asarray(xbar, float), np.asarray(tbar, float))
    ax = np.abs(xb)
    mid = 0.5 * (ax + tb)
    x = np.select([tb >= ax, tb <= -ax], [xb, np.zeros_like(xb)], np.sign(xb) * mid)
    t = np.select([tb >= ax, tb <= -ax], [tb, np.zeros_like(tb)], mid)
    return x, t


def project_epigraph_l1(xbar: float, tbar: float) -> EpigraphPoint:
    """Exact projection onto {(x, t): t >= |x|} (the p = 1 baseline set)."""
    _check_finite(xbar, tbar)
    x, t = project_epigraph_l1_batch(xbar, tbar)
    return EpigraphPoint(float(x), float(t))


def soft_threshold(tbar, w):
    """Shrinkage sign(tbar) * max(|tbar| - 1/w, 0), the prox of |t| at weight w."""
    wv = np.asarray(w, dtype=float)
    if np.any(wv <= 0):
        raise ValueError("prox weight must be positive")
    tb = np.asarray(tbar, dtype=float)
    out = np.sign(tb) * np.maximum(np.abs(tb) - 1.0 / wv, 0.0)
    if np.isscalar(tbar) and out.ndim == 0:
        return float(out)
    return out
