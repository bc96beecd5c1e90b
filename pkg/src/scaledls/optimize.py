"""Empirical risk and batch minimizers for generalized linear problems.

The risk is (1/n) sum_i [psi(<x_i, beta>) - y_i <x_i, beta>] over training
rows. Six methods are provided, all sharing one backtracking line search:

    nr     Newton-Raphson (exact Hessian, Cholesky solve)
    ns     curvature-estimate Newton: Stein-type Hessian from a covariance
           sub-sample plus a rank-one correction
    bfgs   dense quasi-Newton
    lbfgs  limited-memory quasi-Newton, two-loop recursion
    gd     gradient descent
    agd    accelerated gradient descent (momentum (k-1)/(k+2))

Per-iteration traces record objective, gradient norm, cumulative wall time,
and held-out test error; trace bookkeeping (test error, list appends) is
kept outside the timed region.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _backend
from .errors import CurvatureOverflowError, StalledLineSearchError
from .losses import as_family
from .regression import default_subsample_size

_METHODS = ("nr", "ns", "bfgs", "lbfgs", "gd", "agd")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for ``minimize``.

    ``init`` is either the string "random" (iid uniform on
    [-1/sqrt(p), 1/sqrt(p)], seeded) or an explicit start vector.
    """

    method: str
    init: object = "random"
    seed: int = 0
    grad_tol: float = 1e-8
    max_iters: int = 500
    linesearch_alpha: float = 0.3
    linesearch_beta: float = 0.8
    lbfgs_memory: int = 10
    ns_subsample: int | None = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if isinstance(self.init, str) and self.init != "random":
            raise ValueError(f"unknown init rule {self.init!r}")
        if not 0.0 < self.linesearch_alpha < 0.5:
            raise ValueError("linesearch_alpha must lie in (0, 0.5)")
        if not 0.0 < self.linesearch_beta < 1.0:
            raise ValueError("linesearch_beta must lie in (0, 1)")
        if self.grad_tol <= 0 or self.max_iters < 1:
            raise ValueError("grad_tol must be positive and max_iters >= 1")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs_memory must be at least 1")


@dataclass
class OptimizerTrace:
    """Per-iteration record of a minimize run."""

    method: str
    iterates: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    cum_time_seconds: list = field(default_factory=list)
    test_error: list = field(default_factory=list)
    converged: bool = False
    hessian_fallbacks: int = 0
    skipped_updates: int = 0

    @property
    def n_iterations(self):
        return max(0, len(self.objective) - 1)


def empirical_risk(data, family, beta):
    """(1/n) sum over training rows of psi(<x_i, beta>) - y_i <x_i, beta>."""
    family = as_family(family)
    beta = np.asarray(beta, dtype=np.float64)
    z = data.train_X @ beta
    return _risk_from_z(z, data.train_y, family)


def _risk_from_z(z, y, family):
    n = z.shape[0]
    if family.code is not None:
        return _backend.risk_sum(family.code, z, y) / n
    p0 = family._ladder(z, 0)
    return float((p0 - y * z).sum()) / n


def risk_gradient(data, family, beta):
    """(1/n) X' (psi'(X beta) - y) over training rows."""
    family = as_family(family)
    beta = np.asarray(beta, dtype=np.float64)
    z = data.train_X @ beta
    return _grad_from_z(z, data.train_X, data.train_y, family)


def _grad_from_z(z, X, y, family):
    if family.code is not None:
        r = _backend.eval_ladder(family.code, 1, z) - y
    else:
        r = family._ladder(z, 1) - y
    return X.T @ r / X.shape[0]


def risk_hessian(data, family, beta):
    """(1/n) X' diag(psi''(X beta)) X over training rows."""
    family = as_family(family)
    beta = np.asarray(beta, dtype=np.float64)
    X = data.train_X
    z = X @ beta
    if family.code is not None:
        w = _backend.eval_ladder(family.code, 2, z)
    else:
        w = family._ladder(z, 2)
    return X.T @ (X * w[:, None]) / X.shape[0]


def test_error(data, family, beta, test_rows=None):
    """Mean squared error of the estimated mean psi'(<x, beta>) on test rows.

    Returns nan when the dataset has no held-out rows.
    """
    family = as_family(family)
    beta = np.asarray(beta, dtype=np.float64)
    if test_rows is None:
        Xt, yt = data.test_X, data.test_y
    else:
        rows = np.asarray(test_rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        Xt, yt = data.X[rows], data.y[rows]
    if Xt.shape[0] == 0:
        return float("nan")
    z = Xt @ beta
    if family.code is not None:
        mu = _backend.eval_ladder(family.code, 1, z)
    else:
        mu = family._ladder(z, 1)
    return float(np.mean((mu - yt) ** 2))


def _objective_noise(f0, n_terms):
    """Floating-point resolution of a length-n mean: rounding noise scale."""
    return 32.0 * np.finfo(np.float64).eps * math.sqrt(n_terms) * max(abs(f0), 1.0)


def _backtracking(risk, x, d, g, f0, alpha, shrink, noise=0.0, t0=1.0,
                  t_cap=1.0, max_halvings=60):
    """Armijo backtracking from step t0 <= 1.

    Returns (t, f(x + t d), x + t d, certified) where ``certified`` marks a
    strict sufficient-decrease acceptance. Out-of-range risk evaluations
    (Poisson overflow on a wild trial step) count as +inf and simply shrink
    the step.

    Near a minimizer the true per-step decrease drops below what a
    length-n float64 sum can resolve (the ``noise`` argument), and the
    strict test rejects everything. Such steps are then accepted once they
    are no larger than ``t_cap``, the most recent certified step: a step
    size that satisfied strict Armijo keeps the iteration contractive, so
    progress continues even though the objective comparison is blind.
    """
    slope = float(g @ d)
    t = t0
    for _ in range(max_halvings + 1):
        xt = x + t * d
        try:
            ft = risk(xt)
        except CurvatureOverflowError:
            ft = float("inf")
        if np.isfinite(ft):
            if ft <= f0 + alpha * t * slope:
                return t, ft, xt, True
            if alpha * t * abs(slope) <= noise and ft <= f0 + noise and t <= t_cap:
                return t, ft, xt, False
        t *= shrink
    raise StalledLineSearchError(
        f"backtracking found no acceptable step after {max_halvings} halvings"
    )


class _NewtonState:
    def __init__(self, ctx):
        self.ctx = ctx

    def direction(self, beta, g, trace):
        H = risk_hessian(self.ctx.data, self.ctx.family, beta)
        try:
            factor = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
            d = -scipy.linalg.cho_solve(factor, g, check_finite=False)
        except scipy.linalg.LinAlgError:
            trace.hessian_fallbacks += 1
            return -g
        if float(g @ d) >= 0.0:  # indefinite curvature slipped through
            trace.hessian_fallbacks += 1
            return -g
        return d

    def update(self, s, yv, trace):
        pass


class _SteinNewtonState:
    """Newton direction from a Stein-type Hessian estimate.

    H(beta) ~= mu2 * Cov_S + mu4 * (Cov_S beta)(Cov_S beta)' where mu2 and
    mu4 are the mean second and fourth derivatives at the fitted values and
    Cov_S comes from a row sub-sample. The inverse is a rank-one
    (Sherman-Morrison) update of the cached Cov_S inverse; a failed
    correction falls back to mu2 * Cov_S alone.
    """

    def __init__(self, ctx):
        self.ctx = ctx
        data, cfg = ctx.data, ctx.cfg
        size = cfg.ns_subsample or default_subsample_size(data.p, data.n_train)
        size = min(max(size, data.p + 1), data.n_train)
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        rows = rng.choice(data.n_train, size=size, replace=False)
        Xs = data.train_X[np.sort(rows)]
        self.cov = Xs.T @ Xs / Xs.shape[0]
        self.factor = scipy.linalg.cho_factor(self.cov, lower=True, check_finite=False)

    def direction(self, beta, g, trace):
        data, family = self.ctx.data, self.ctx.family
        z = data.train_X @ beta
        if family.code is not None:
            mu2 = float(np.mean(_backend.eval_ladder(family.code, 2, z)))
            mu4 = float(np.mean(_backend.eval_ladder(family.code, 4, z)))
        else:
            mu2 = float(np.mean(family._ladder(z, 2)))
            mu4 = float(np.mean(family._ladder(z, 4)))
        if not np.isfinite(mu2) or mu2 <= 0.0:
            trace.hessian_fallbacks += 1
            return -g
        solve = lambda v: scipy.linalg.cho_solve(self.factor, v, check_finite=False)
        ainv_g = solve(g) / mu2
        u = self.cov @ beta
        ainv_u = solve(u) / mu2
        denom = 1.0 + mu4 * float(u @ ainv_u)
        if np.isfinite(denom) and abs(denom) > 1e-12 and denom > 0.0:
            d = -(ainv_g - mu4 * ainv_u * float(u @ ainv_g) / denom)
        else:
            d = -ainv_g  # rank-one correction lost definiteness
        if float(g @ d) >= 0.0:
            trace.hessian_fallbacks += 1
            return -g
        return d

    def update(self, s, yv, trace):
        pass


_CURVATURE_SKIP = 1e-12


class _BfgsState:
    def __init__(self, ctx):
        self.h_inv = np.eye(ctx.data.p)
        self.first_update = True

    def direction(self, beta, g, trace):
        return -(self.h_inv @ g)

    def update(self, s, yv, trace):
        sy = float(s @ yv)
        if sy <= _CURVATURE_SKIP * np.linalg.norm(s) * np.linalg.norm(yv):
            trace.skipped_updates += 1
            return
        if self.first_update:
            self.h_inv *= sy / float(yv @ yv)
            self.first_update = False
        rho = 1.0 / sy
        hy = self.h_inv @ yv
        # (I - rho s y') H (I - rho y s') + rho s s'
        self.h_inv -= rho * (np.outer(s, hy) + np.outer(hy, s))
        self.h_inv += rho * (rho * float(yv @ hy) + 1.0) * np.outer(s, s)


class _LbfgsState:
    def __init__(self, ctx):
        self.pairs = deque(maxlen=ctx.cfg.lbfgs_memory)

    def direction(self, beta, g, trace):
        q = g.copy()
        alphas = []
        for s, yv, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            q -= a * yv
            alphas.append(a)
        if self.pairs:
            s, yv, rho = self.pairs[-1]
            q *= float(s @ yv) / float(yv @ yv)
        for (s, yv, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(yv @ q)
            q += (a - b) * s
        return -q

    def update(self, s, yv, trace):
        sy = float(s @ yv)
        if sy <= _CURVATURE_SKIP * np.linalg.norm(s) * np.linalg.norm(yv):
            trace.skipped_updates += 1
            return
        self.pairs.append((s.copy(), yv.copy(), 1.0 / sy))


class _GdState:
    def __init__(self, ctx):
        pass

    def direction(self, beta, g, trace):
        return -g

    def update(self, s, yv, trace):
        pass


_STATES = {
    "nr": _NewtonState,
    "ns": _SteinNewtonState,
    "bfgs": _BfgsState,
    "lbfgs": _LbfgsState,
    "gd": _GdState,
}


class _Context:
    def __init__(self, data, family, cfg):
        self.data = data
        self.family = family
        self.cfg = cfg


def _initial_beta(cfg, p):
    if isinstance(cfg.init, str):
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        bound = 1.0 / math.sqrt(p)
        return rng.uniform(-bound, bound, size=p)
    beta = np.ascontiguousarray(cfg.init, dtype=np.float64)
    if beta.shape != (p,):
        raise ValueError(f"init vector must have length {p}, got shape {beta.shape}")
    return beta.copy()


def minimize(data, family, cfg, test_rows=None):
    """Minimize the empirical risk with the configured method.

    Stops when the gradient norm reaches cfg.grad_tol or after
    cfg.max_iters iterations (flagged via ``converged``). The returned
    trace has one entry per visited iterate, the initial point included.
    """
    family = as_family(family)
    ctx = _Context(data, family, cfg)
    X, y = data.train_X, data.train_y
    risk = lambda b: _risk_from_z(X @ b, y, family)
    grad = lambda b: _grad_from_z(X @ b, X, y, family)

    trace = OptimizerTrace(method=cfg.method)
    beta = _initial_beta(cfg, data.p)

    elapsed = 0.0
    t0 = time.perf_counter()
    if cfg.method == "agd":
        state = None
        beta_prev = beta.copy()
        k = 0
    else:
        state = _STATES[cfg.method](ctx)
    obj = risk(beta)
    g = grad(beta)
    gnorm = float(np.linalg.norm(g))
    elapsed += time.perf_counter() - t0

    def record(b, o, gn):
        trace.iterates.append(b.copy())
        trace.objective.append(o)
        trace.grad_norm.append(gn)
        trace.cum_time_seconds.append(elapsed)
        trace.test_error.append(test_error(data, family, b, test_rows))

    record(beta, obj, gnorm)

    n_train = X.shape[0]
    t_prev = 1.0
    t_cert = 1.0
    while gnorm > cfg.grad_tol and trace.n_iterations < cfg.max_iters:
        t0 = time.perf_counter()
        t_start = min(1.0, t_prev / cfg.linesearch_beta)
        if cfg.method == "agd":
            k += 1
            momentum = (k - 1.0) / (k + 2.0)
            look = beta + momentum * (beta - beta_prev)
            g_look = grad(look)
            obj_look = risk(look)
            t_prev, obj_new, beta_new, certified = _backtracking(
                risk, look, -g_look, g_look, obj_look,
                cfg.linesearch_alpha, cfg.linesearch_beta,
                noise=_objective_noise(obj_look, n_train),
                t0=t_start, t_cap=t_cert,
            )
            beta_prev = beta
        else:
            d = state.direction(beta, g, trace)
            t_prev, obj_new, beta_new, certified = _backtracking(
                risk, beta, d, g, obj,
                cfg.linesearch_alpha, cfg.linesearch_beta,
                noise=_objective_noise(obj, n_train),
                t0=t_start, t_cap=t_cert,
            )
        if certified:
            t_cert = t_prev
        g_new = grad(beta_new)
        if state is not None:
            state.update(beta_new - beta, g_new - g, trace)
        beta, obj, g = beta_new, obj_new, g_new
        gnorm = float(np.linalg.norm(g))
        elapsed += time.perf_counter() - t0
        record(beta, obj, gnorm)

    trace.converged = gnorm <= cfg.grad_tol
    return trace
