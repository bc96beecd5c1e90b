"""Ordinary least squares with optional covariance sub-sampling, and ridge.

The sub-sampled solve uses the Gram matrix of a random row subset S against
the full-sample cross moment: ((1/|S|) Xs'Xs) b = ((1/n) X'y). Both solves
go through a symmetric positive-definite factorization; n >> p makes the
p x p solve cheap, and the Gram form is what the scaling estimator needs.
No intercept handling: append a constant column if you want one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import SingularDesignError


@dataclass(eq=False)
class Dataset:
    """A dense design matrix, response vector, and optional held-out split.

    The test mask, when present, must flag between 5% and 15% of rows;
    fitting code only ever reads the unmasked (training) rows.
    """

    X: np.ndarray
    y: np.ndarray
    test_mask: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        n, p = self.X.shape
        # n = p (exactly determined) is allowed; fewer rows than columns is not
        if not (n >= p >= 1):
            raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
        if self.y.shape != (n,):
            raise ValueError(f"y must have shape ({n},), got {self.y.shape}")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ValueError("X and y must be finite")
        if self.test_mask is not None:
            mask = np.asarray(self.test_mask, dtype=bool)
            if mask.shape != (n,):
                raise ValueError(f"test_mask must have shape ({n},)")
            frac = mask.sum() / n
            if not 0.05 <= frac <= 0.15:
                raise ValueError(
                    f"test_mask flags {frac:.1%} of rows; must be within 5%..15%"
                )
            self.test_mask = mask

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def n_train(self):
        if self.test_mask is None:
            return self.n
        return int(self.n - self.test_mask.sum())

    @cached_property
    def train_X(self):
        if self.test_mask is None:
            return self.X
        return np.ascontiguousarray(self.X[~self.test_mask])

    @cached_property
    def train_y(self):
        if self.test_mask is None:
            return self.y
        return self.y[~self.test_mask]

    @cached_property
    def test_X(self):
        if self.test_mask is None:
            return self.X[:0]
        return np.ascontiguousarray(self.X[self.test_mask])

    @cached_property
    def test_y(self):
        if self.test_mask is None:
            return self.y[:0]
        return self.y[self.test_mask]

    def train_indices(self):
        if self.test_mask is None:
            return np.arange(self.n)
        return np.flatnonzero(~self.test_mask)


@dataclass
class OlsFit:
    """Solution of the (possibly sub-sampled) normal equations."""

    beta: np.ndarray
    subsample_indices: np.ndarray | None
    gram_condition_estimate: float


def default_subsample_size(p, n_train):
    """Sub-sample size used when one is requested without a number:
    min(n, ceil(4 p ln max(p, 2)))."""
    return min(n_train, math.ceil(4.0 * p * math.log(max(p, 2))))


def _condition_estimate(gram):
    w = np.linalg.eigvalsh(gram)
    lo, hi = float(w[0]), float(w[-1])
    if lo <= 0.0:
        return float("inf")
    return hi / lo


def _spd_solve(gram, rhs):
    """Cholesky solve, returning (solution, condition estimate)."""
    cond = _condition_estimate(gram)
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularDesignError(
            f"Gram matrix is numerically singular (condition estimate {cond:.3e})",
            condition_estimate=cond,
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False), cond


def _resolve_subsample(data, subsample, seed):
    """Turn the subsample argument into explicit training-row indices."""
    train_rows = data.train_indices()
    n_train = train_rows.size
    p = data.p
    if subsample is None:
        return None
    if subsample is True or (isinstance(subsample, str) and subsample == "auto"):
        size = default_subsample_size(p, n_train)
        subsample = size
    if isinstance(subsample, (int, np.integer)):
        size = int(subsample)
        if not p < size <= n_train:
            raise ValueError(
                f"subsample size must satisfy p < s <= n_train "
                f"({p} < s <= {n_train}), got {size}"
            )
        rng = np.random.Generator(np.random.Philox(seed))
        return np.sort(rng.choice(train_rows, size=size, replace=False))
    idx = np.asarray(subsample)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("subsample indices must be a nonempty 1-d collection")
    idx = idx.astype(np.int64)
    if np.unique(idx).size != idx.size:
        raise ValueError("subsample indices must be distinct")
    if idx.min() < 0 or idx.max() >= data.n:
        raise ValueError("subsample indices out of range")
    if data.test_mask is not None and data.test_mask[idx].any():
        raise ValueError("subsample indices must not touch held-out rows")
    return np.sort(idx)


def fit_ols(data, subsample=None, seed=0):
    """Least squares via the sub-sampled normal equations.

    ``subsample`` may be None (use every training row), an integer size,
    ``"auto"`` (the default size rule), or an explicit index collection.
    Sampling is uniform without replacement over training rows, seeded.
    """
    rhs = data.train_X.T @ data.train_y / data.n_train
    idx = _resolve_subsample(data, subsample, seed)
    if idx is None:
        Xs = data.train_X
    else:
        Xs = data.X[idx]
    gram = Xs.T @ Xs / Xs.shape[0]
    beta, cond = _spd_solve(gram, rhs)
    return OlsFit(beta=beta, subsample_indices=idx, gram_condition_estimate=cond)


def fit_ridge(data, lam):
    """Solve ((1/n) X'X + lam I) b = (1/n) X'y over the training rows.

    lam = 0 coincides with full-sample fit_ols. A failed factorization at
    lam > 0 falls back to an eigenvalue-shifted solve; at lam = 0 it raises,
    exactly like fit_ols.
    """
    if lam < 0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")
    rhs = data.train_X.T @ data.train_y / data.n_train
    gram = data.train_X.T @ data.train_X / data.n_train
    if lam > 0:
        gram = gram + lam * np.eye(data.p)
    try:
        beta, cond = _spd_solve(gram, rhs)
    except SingularDesignError:
        if lam == 0:
            raise
        w = np.linalg.eigvalsh(gram)
        shift = max(0.0, -float(w[0])) + 1e-12 * max(float(w[-1]), 1.0)
        beta, cond = _spd_solve(gram + shift * np.eye(data.p), rhs)
    return OlsFit(beta=beta, subsample_indices=None, gram_condition_estimate=cond)
