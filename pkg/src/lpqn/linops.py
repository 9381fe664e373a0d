"""Linear operators used by the experiments.

A minimal matrix-free abstraction (apply/adjoint/dims) plus the concrete
operators the benchmarks need: dense matrices, entry sampling, partial
orthonormal DCT-II, truncated Toeplitz convolution, and the Hankel
lift/adjoint pair.  Operators are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft
import scipy.linalg

__all__ = [
    "LinearOperator",
    "dense_op",
    "sampling_op",
    "partial_dct_op",
    "toeplitz_conv_op",
    "HankelShape",
    "hankel_lift",
    "hankel_adjoint",
    "antidiag_weights",
    "spectral_norm",
    "vec",
    "unvec",
]


class LinearOperator:
    """A linear map y = A x with an explicit adjoint.

    ``apply`` and ``adjoint`` must satisfy <apply(x), y> = <x, adjoint(y)>
    for all x, y.  Instances are immutable and concurrently callable.
    """

    def __init__(self, rows: int, cols: int, apply: Callable, adjoint: Callable, matrix=None):
        if rows <= 0 or cols <= 0:
            raise ValueError("operator dimensions must be positive")
        self.rows = int(rows)
        self.cols = int(cols)
        self._apply = apply
        self._adjoint = adjoint
        self._matrix = matrix

    def __call__(self, x):
        return self.apply(x)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cols,):
            raise ValueError(f"expected input of shape ({self.cols},), got {x.shape}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.rows,):
            raise ValueError(f"expected input of shape ({self.rows},), got {y.shape}")
        return self._adjoint(y)

    def to_dense(self) -> np.ndarray:
        """Materialize the operator as a (rows, cols) array."""
        if self._matrix is not None:
            return np.array(self._matrix, dtype=float)
        out = np.empty((self.rows, self.cols))
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self._apply(e)
            e[j] = 0.0
        return out

    def __repr__(self):
        return f"LinearOperator({self.rows}x{self.cols})"


def dense_op(matrix) -> LinearOperator:
    """Wrap a dense matrix as a LinearOperator."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return LinearOperator(a.shape[0], a.shape[1], lambda x: a @ x, lambda y: a.T @ y, matrix=a)


def sampling_op(indices, n: int) -> LinearOperator:
    """Entry-selection operator: apply picks x[indices], adjoint scatters.

    ``indices`` must be distinct, sorted, and within range; each row of the
    implied matrix is a single 1 at the selected position, so the spectral
    norm is exactly 1.
    """
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("indices must be a nonempty 1-D sequence")
    if np.any(idx < 0) or np.any(idx >= n):
        raise IndexError("sampling index out of range")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("indices must be strictly increasing")

    def apply(x):
        return x[idx]

    def adjoint(y):
        out = np.zeros(n)
        out[idx] = y
        return out

    return LinearOperator(idx.size, n, apply, adjoint)


def partial_dct_op(row_indices, n: int) -> LinearOperator:
    """Selected rows of the orthonormal DCT-II matrix.

    Rows of the full transform are orthonormal, so any row subset has unit
    spectral norm.  Implemented with the fast transform behind the same
    apply/adjoint interface as an explicit matrix.
    """
    rows = np.asarray(row_indices, dtype=int)
    if rows.ndim != 1 or rows.size == 0:
        raise ValueError("row_indices must be a nonempty 1-D sequence")
    if np.any(rows < 0) or np.any(rows >= n):
        raise IndexError("DCT row index out of range")
    if np.unique(rows).size != rows.size:
        raise ValueError("row_indices must be distinct")

    def apply(x):
        return scipy.fft.dct(x, type=2, norm="ortho")[rows]

    def adjoint(y):
        full = np.zeros(n)
        full[rows] = y
        return scipy.fft.idct(full, type=2, norm="ortho")

    return LinearOperator(rows.size, n, apply, adjoint)


def toeplitz_conv_op(u, n: int, m: int) -> LinearOperator:
    """Truncated convolution by the input sequence u.

    ``apply(h)`` returns the first m samples of the full convolution u * h
    (the output window is shorter than the full span in the identification
    experiments); the adjoint is the matching truncated correlation.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("u must be a nonempty 1-D sequence")
    T = u.size
    if m > n + T - 1:
        raise ValueError(f"m = {m} exceeds the full convolution length {n + T - 1}")
    u_rev = u[::-1]

    def apply(h):
        return np.convolve(u, h)[:m]

    def adjoint(y):
        ypad = np.zeros(n + T - 1)
        ypad[:m] = y
        return np.convolve(ypad, u_rev)[T - 1 : T - 1 + n]

    return LinearOperator(m, n, apply, adjoint)


@dataclass(frozen=True)
class HankelShape:
    """Dimensions of the Hankel lift of a length-n vector: r + c - 1 = n."""

    r: int
    c: int
    n: int

    def __post_init__(self):
        if self.r < 1 or self.c < 1:
            raise ValueError("Hankel dimensions must be positive")
        if self.r + self.c - 1 != self.n:
            raise ValueError(f"need r + c - 1 = n, got {self.r}+{self.c}-1 != {self.n}")

    @classmethod
    def near_square(cls, n: int) -> "HankelShape":
        # r = ceil((n+1)/2): maximizes rank sensitivity of the lift
        r = (n + 2) // 2
        return cls(r, n + 1 - r, n)


def hankel_lift(x, shape: HankelShape) -> np.ndarray:
    """The r x c Hankel matrix X with X[i, j] = x[i + j]."""
    x = np.asarray(x, dtype=float)
    if x.shape != (shape.n,):
        raise ValueError(f"expected vector of length {shape.n}, got shape {x.shape}")
    return scipy.linalg.hankel(x[: shape.r], x[shape.r - 1 :])


def _antidiag_index(shape: HankelShape) -> np.ndarray:
    return np.add.outer(np.arange(shape.r), np.arange(shape.c)).ravel()


def hankel_adjoint(Z, shape: HankelShape) -> np.ndarray:
    """Adjoint of the lift: sums of the anti-diagonals of Z."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (shape.r, shape.c):
        raise ValueError(f"expected matrix of shape ({shape.r}, {shape.c}), got {Z.shape}")
    return np.bincount(_antidiag_index(shape), weights=Z.ravel(), minlength=shape.n)


def antidiag_weights(shape: HankelShape) -> np.ndarray:
    """Number of matrix entries on each anti-diagonal (hankel_adjoint of ones)."""
    return np.bincount(_antidiag_index(shape), minlength=shape.n).astype(float)


def spectral_norm(op: LinearOperator, tol: float = 1e-10, maxit: int = 5000, seed: int = 0) -> float:
    """Largest singular value by power iteration on opᵀop.

    Returns a lower bound that is within ``tol`` (relative change between
    sweeps) of the true value, or the best estimate after ``maxit`` sweeps.
    Deterministic for a fixed seed; a zero operator yields 0.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.cols)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return 0.0
    x /= nx
    sigma = 0.0
    for _ in range(maxit):
        y = op.apply(x)
        sigma_new = float(np.linalg.norm(y))  # = ‖A x‖ with ‖x‖ = 1
        if sigma_new == 0.0:
            return 0.0
        x = op.adjoint(y)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return sigma_new
        x /= nx
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            break
        sigma = sigma_new
    return float(np.linalg.norm(op.apply(x)))


def vec(X) -> np.ndarray:
    """Stack the columns of X into a vector (column-major)."""
    return np.asarray(X, dtype=float).ravel(order="F")


def unvec(x, m: int, n: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(x, dtype=float).reshape((m, n), order="F")
