"""Seeded generators for every benchmark's data recipe.

All randomness flows through per-component Philox streams keyed by
``(seed, component id)``: a counter-based 64-bit generator, so identical
(parameters, seed) reproduce instances bit-for-bit, and adding a new
component never perturbs the draws of existing ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .linops import LinearOperator, partial_dct_op, toeplitz_conv_op

__all__ = [
    "stream_rng",
    "SparseBinaryInstance",
    "gen_sparse_binary_instance",
    "ClassificationData",
    "SyntheticClassifySpec",
    "gen_classification_instance",
    "write_labeled_features",
    "SysidInstance",
    "gen_sysid_instance",
    "CompletionInstance",
    "gen_completion_instance",
    "ApgInstance",
    "gen_apg_instance",
]

# fixed stream ids; append only, never renumber
_STREAMS = {
    "matrix": 1,
    "support": 2,
    "values": 3,
    "noise": 4,
    "poles": 5,
    "residues": 6,
    "input": 7,
    "features": 8,
    "labels": 9,
    "classifier": 10,
    "flips": 11,
    "rows": 12,
    "signs": 13,
    "magnitudes": 14,
    "input_noise": 15,
}


def stream_rng(seed: int, component: str) -> np.random.Generator:
    """Independent deterministic stream for one generator component."""
    key = np.array([np.uint64(seed), np.uint64(_STREAMS[component])], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class SparseBinaryInstance:
    U: np.ndarray        # m x n sensing matrix [M, -M]
    x_opt: np.ndarray    # planted sparse signal
    v: np.ndarray        # noisy measurements


def gen_sparse_binary_instance(
    n: int, m: int, sparsity_frac: float = 0.2, sigma: float = 0.0, seed: int = 0
) -> SparseBinaryInstance:
    """Sparse recovery instance with a binary sensing matrix.

    M is m x (n/2) binary with a per-column count of ones uniform in
    [10, min(20, m)]; U = [M, -M] column-concatenated (the stated dimensions
    force the concatenation along columns).  The planted signal has
    ceil(sparsity_frac * n) standard-normal entries at uniform positions and
    v = U x_opt + N(0, sigma^2 I).
    """
    if n % 2:
        raise ValueError("n must be even (U concatenates M and -M)")
    if m > n:
        raise ValueError("m must not exceed n")
    lo = 10
    if m < lo:
        warnings.warn(f"m = {m} < 10: reducing the per-column ones range to [1, {m}]")
        lo = 1
    hi = min(20, m)
    rng_m = stream_rng(seed, "matrix")
    half = n // 2
    M = np.zeros((m, half))
    counts = rng_m.integers(lo, hi + 1, size=half)
    for j in range(half):
        M[rng_m.choice(m, size=counts[j], replace=False), j] = 1.0
    U = np.concatenate([M, -M], axis=1)
    k = int(np.ceil(sparsity_frac * n))
    support = stream_rng(seed, "support").choice(n, size=k, replace=False)
    x_opt = np.zeros(n)
    x_opt[support] = stream_rng(seed, "values").standard_normal(k)
    v = U @ x_opt + sigma * stream_rng(seed, "noise").standard_normal(m)
    return SparseBinaryInstance(U=U, x_opt=x_opt, v=v)


@dataclass
class ClassificationData:
    features: np.ndarray             # m x n binary
    labels: np.ndarray               # +-1
    planted: Optional[np.ndarray] = None  # synthetic mode only


@dataclass(frozen=True)
class SyntheticClassifySpec:
    """Synthetic binary-classification recipe: n-word dictionary, m samples,
    a planted k-sparse classifier, labels by its sign with a flip rate."""

    n: int
    m: int
    k: int
    density: float = 0.25
    flip_rate: float = 0.0


def _parse_labeled_features(path, n: Optional[int] = None) -> ClassificationData:
    rows = []
    labels = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                lab = float(parts[0])
            except ValueError:
                raise ValueError(f"line {lineno}: bad label field {parts[0]!r}")
            if lab not in (-1.0, 1.0):
                raise ValueError(f"line {lineno}: labels must be +-1, got {parts[0]!r}")
            entries = []
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":")
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: bad index:value token {tok!r}")
                if idx < 1:
                    raise ValueError(f"line {lineno}: indices are 1-based, got {idx}")
                entries.append((idx, val))
                max_idx = max(max_idx, idx)
            rows.append(entries)
            labels.append(lab)
    if not rows:
        raise ValueError("empty dataset file")
    width = n if n is not None else max_idx
    if max_idx > width:
        raise ValueError(f"feature index {max_idx} exceeds declared width {width}")
    X = np.zeros((len(rows), width))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    return ClassificationData(features=X, labels=np.asarray(labels))


def write_labeled_features(path, features, labels):
    """Write samples in the '<label> <index>:<value> ...' format (1-based)."""
    features = np.asarray(features)
    with open(path, "w") as fh:
        for row, lab in zip(features, np.asarray(labels)):
            idx = np.nonzero(row)[0]
            toks = [f"{int(lab):+d}"] + [f"{j + 1}:{row[j]:g}" for j in idx]
            fh.write(" ".join(toks) + "\n")


def gen_classification_instance(
    source: Union[str, Path, SyntheticClassifySpec], seed: int = 0, n: Optional[int] = None
) -> ClassificationData:
    """Load a labeled-feature file, or synthesize a planted-classifier set."""
    if isinstance(source, (str, Path)):
        return _parse_labeled_features(source, n=n)
    spec = source
    feats = (stream_rng(seed, "features").random((spec.m, spec.n)) < spec.density).astype(float)
    w = np.zeros(spec.n)
    supp = stream_rng(seed, "support").choice(spec.n, size=spec.k, replace=False)
    w[supp] = stream_rng(seed, "classifier").standard_normal(spec.k)
    margins = feats @ w
    labels = np.where(margins >= 0, 1.0, -1.0)
    if spec.flip_rate > 0:
        flips = stream_rng(seed, "flips").random(spec.m) < spec.flip_rate
        labels[flips] *= -1.0
    return ClassificationData(features=feats, labels=labels, planted=w)


@dataclass
class SysidInstance:
    u: np.ndarray              # input sequence, length T
    T_op: LinearOperator       # truncated convolution by u (m x n)
    y_noisy: np.ndarray        # observed output window
    true_order: int
    h: np.ndarray              # true impulse response (length n)


def gen_sysid_instance(eta: int, T: int, m: int, n: int, seed: int = 0) -> SysidInstance:
    """Random stable discrete SISO system and its noisy output window.

    eta/2 conjugate pole pairs are drawn uniformly from the disk of radius
    0.95 with standard-normal complex residues, giving an impulse response
    h[k] = sum_j 2 Re(c_j p_j^k) whose Hankel lift has rank eta.  The input is
    uniform on [-5, 5] and the output noise uniform on [-0.25, 0.25].
    """
    if eta < 2 or eta % 2:
        raise ValueError("eta must be a positive even integer")
    if m > n + T - 1:
        raise ValueError("m must not exceed the full convolution length")
    rng_p = stream_rng(seed, "poles")
    npairs = eta // 2
    radius = 0.95 * np.sqrt(rng_p.random(npairs))
    angle = rng_p.uniform(0.0, np.pi, size=npairs)
    poles = radius * np.exp(1j * angle)
    res = stream_rng(seed, "residues")
    residues = res.standard_normal(npairs) + 1j * res.standard_normal(npairs)
    k = np.arange(n)
    h = np.sum(2.0 * (residues[:, None] * poles[:, None] ** k[None, :]).real, axis=0)
    u = stream_rng(seed, "input").uniform(-5.0, 5.0, size=T)
    T_op = toeplitz_conv_op(u, n, m)
    noise = stream_rng(seed, "noise").uniform(-0.25, 0.25, size=m)
    y_noisy = T_op.apply(h) + noise
    return SysidInstance(u=u, T_op=T_op, y_noisy=y_noisy, true_order=eta, h=h)


@dataclass
class CompletionInstance:
    M: np.ndarray          # ground-truth rank-r matrix
    omega: np.ndarray      # sorted flat (column-major) sample positions
    b: np.ndarray          # noisy sampled entries


def gen_completion_instance(
    m: int, n: int, r: int, sigma: float = 0.1, sampling_ratio: float = 0.195, seed: int = 0
) -> CompletionInstance:
    """Rank-r completion instance: M = M_L M_Rᵀ with standard-normal factors,
    q = round(ratio * m * n) positions sampled without replacement from
    vec(M) (column-major), b = sampled entries + N(0, sigma^2)."""
    if r > min(m, n):
        raise ValueError("rank must not exceed min(m, n)")
    if not 0 < sampling_ratio <= 1:
        raise ValueError("sampling_ratio must lie in (0, 1]")
    rng_m = stream_rng(seed, "matrix")
    M = rng_m.standard_normal((m, r)) @ rng_m.standard_normal((n, r)).T
    q = int(round(sampling_ratio * m * n))
    omega = np.sort(stream_rng(seed, "support").choice(m * n, size=q, replace=False))
    b = M.ravel(order="F")[omega] + sigma * stream_rng(seed, "noise").standard_normal(q)
    return CompletionInstance(M=M, omega=omega, b=b)


@dataclass
class ApgInstance:
    x_star: np.ndarray
    A: LinearOperator      # partial DCT, m x n
    b: np.ndarray


def gen_apg_instance(
    n: int, m: int, s: Optional[int] = None, sigma1: float = 0.005, sigma2: float = 0.001, seed: int = 0
) -> ApgInstance:
    """Compressed-sensing target with magnitudes spanning three decades.

    Support of size s (default ceil(0.5 m)) uniform in [n]; nonzeros are
    (+-1) * 10^(3u) with u uniform on [0, 1].  A keeps m uniformly chosen
    rows of the orthonormal DCT-II; b = A(x* + e1) + e2 with input/output
    noise levels sigma1/sigma2.
    """
    if s is None:
        s = int(np.ceil(0.5 * m))
    if not (s <= m <= n):
        raise ValueError("need s <= m <= n")
    support = stream_rng(seed, "support").choice(n, size=s, replace=False)
    signs = stream_rng(seed, "signs").choice([-1.0, 1.0], size=s)
    mags = 10.0 ** (3.0 * stream_rng(seed, "magnitudes").random(s))
    x_star = np.zeros(n)
    x_star[support] = signs * mags
    rows = np.sort(stream_rng(seed, "rows").choice(n, size=m, replace=False))
    A = partial_dct_op(rows, n)
    e1 = sigma1 * stream_rng(seed, "input_noise").standard_normal(n)
    e2 = sigma2 * stream_rng(seed, "noise").standard_normal(m)
    b = A.apply(x_star + e1) + e2
    return ApgInstance(x_star=x_star, A=A, b=b)
