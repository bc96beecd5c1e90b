"""Scaled least squares: rescale the OLS vector by the root of the scale
equation 1 = (c/n) sum_i psi2(c yhat_i).

The root is found by Newton's update wrapped in a bisection safeguard: any
Newton step that leaves the current sign-change bracket, or whose
denominator is below 1e-14 in magnitude, is replaced by a bisection step.
The residual at c = 0 is exactly -1, so a bracket always has a negative
lower end; the search prefers the sign change nearest zero along a
geometric (doubling/halving) grid from the initial guess.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import NonConvergenceError, NoRootError
from .losses import as_family
from .regression import fit_ols, fit_ridge

_MIN_DERIVATIVE = 1e-14
_BRACKET_FLOOR = 1e-300


@dataclass(frozen=True)
class ScaleSolveConfig:
    """Root-finder settings for the scale equation.

    ``init`` is either the string "variance" (start at 2 / Var(y), the
    moment-matching guess) or a positive number used as a fixed start.
    """

    init: float | str = "variance"
    tol: float = 1e-10
    max_iters: int = 100
    bracket_max: float = 1e6

    def __post_init__(self):
        if isinstance(self.init, str):
            if self.init != "variance":
                raise ValueError(f"unknown init rule {self.init!r}")
        elif not (np.isfinite(self.init) and self.init > 0):
            raise ValueError(f"fixed init must be a positive number, got {self.init}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.bracket_max > 0:
            raise ValueError("bracket_max must be positive")


@dataclass
class RootTrace:
    """Record of a scale-equation solve."""

    iterates: list = field(default_factory=list)  # (c, residual) per Newton step
    bracket_evaluations: int = 0
    converged: bool = False

    @property
    def iterations(self):
        return max(0, len(self.iterates) - 1)


@dataclass
class SlsResult:
    """A fitted scaled-least-squares estimate."""

    beta_sls: np.ndarray
    beta_ols: np.ndarray
    c: float
    root_trace: RootTrace
    wall_time_seconds: float
    ols_seconds: float = 0.0
    scale_seconds: float = 0.0


def scale_residual(c, yhat, family):
    """Value and derivative of the scale-equation residual at c.

    value = (c/n) sum psi2(c yhat_i) - 1
    derivative = (1/n) sum [psi2(c yhat_i) + c yhat_i psi3(c yhat_i)]
    """
    if not np.isfinite(c):
        raise ValueError("c must be finite")
    yhat = np.ascontiguousarray(yhat, dtype=np.float64)
    if not np.all(np.isfinite(yhat)):
        raise ValueError("yhat must be finite")
    return _residual_terms(float(c), yhat, as_family(family), target=1.0)


def _residual_terms(c, yhat, family, target):
    n = yhat.shape[0]
    if family.code is not None:
        s2, sd = _backend.scale_sums(family.code, c, yhat)
        return c * (s2 / n) - target, sd / n
    t = c * yhat
    p2 = family._ladder(t, 2)
    p3 = family._ladder(t, 3)
    value = c * float(p2.sum()) / n - target
    deriv = float((p2 + t * p3).sum()) / n
    return value, deriv


class _Residual:
    """Scale-equation residual with an evaluation counter."""

    def __init__(self, yhat, family, target):
        self.yhat = yhat
        self.family = family
        self.target = target
        self.evaluations = 0

    def __call__(self, c):
        self.evaluations += 1
        return _residual_terms(c, self.yhat, self.family, self.target)


def _bracket(res, init, tol, bracket_max):
    """Locate a sign change of the residual, preferring the one nearest zero.

    Returns either ("root", c, value) when an evaluation already meets the
    tolerance, or ("bracket", lo, hi) with res(lo) < 0 < res(hi). The
    residual tends to -target as c -> 0+, so a bracket below any positive
    residual always exists; above, the search stops at bracket_max.
    """
    r_init, _ = res(init)
    if abs(r_init) <= tol:
        return ("root", init, r_init)

    if r_init > 0:
        hi = init
        lo = 0.5 * init
        while lo > _BRACKET_FLOOR:
            r_lo, _ = res(lo)
            if abs(r_lo) <= tol:
                return ("root", lo, r_lo)
            if r_lo < 0:
                return ("bracket", lo, hi)
            hi = lo
            lo *= 0.5
        return ("bracket", 0.0, hi)  # residual(0) = -target < 0 analytically

    # r_init < 0: walk up first.
    lo = init
    hi = 2.0 * init
    while hi <= bracket_max:
        r_hi, _ = res(hi)
        if abs(r_hi) <= tol:
            return ("root", hi, r_hi)
        if r_hi > 0:
            return ("bracket", lo, hi)
        lo = hi
        hi *= 2.0

    # No sign change above the init. The residual can still cross below it
    # (rise through zero and fall back before the init), so scan down for a
    # positive region and bracket its lower edge, keeping the root nearest
    # zero reachable.
    probe = 0.5 * init
    hi_pos = None
    while probe > _BRACKET_FLOOR:
        r_p, _ = res(probe)
        if abs(r_p) <= tol:
            return ("root", probe, r_p)
        if r_p > 0:
            hi_pos = probe
            break
        probe *= 0.5
    if hi_pos is None:
        raise NoRootError(
            f"scale residual has no sign change on (0, {bracket_max:g}]; "
            "the scale equation appears to have no root for these fitted values"
        )
    lo2 = 0.5 * hi_pos
    while lo2 > _BRACKET_FLOOR:
        r_lo, _ = res(lo2)
        if abs(r_lo) <= tol:
            return ("root", lo2, r_lo)
        if r_lo < 0:
            return ("bracket", lo2, hi_pos)
        hi_pos = lo2
        lo2 *= 0.5
    return ("bracket", 0.0, hi_pos)


def _solve_scalar_root(yhat, family, target, init, cfg):
    """Safeguarded Newton on c * mean(psi2(c yhat)) - target = 0, c > 0."""
    res = _Residual(yhat, family, target)
    trace = RootTrace()

    kind, *rest = _bracket(res, init, cfg.tol, cfg.bracket_max)
    trace.bracket_evaluations = res.evaluations
    if kind == "root":
        c, value = rest
        trace.iterates.append((c, value))
        trace.converged = True
        return c, trace

    lo, hi = rest
    c = init if lo <= init <= hi else 0.5 * (lo + hi)
    value = None
    for _ in range(cfg.max_iters):
        value, deriv = res(c)
        trace.iterates.append((c, value))
        if abs(value) <= cfg.tol:
            trace.converged = True
            return c, trace
        if value > 0:
            hi = c
        else:
            lo = c
        if abs(deriv) >= _MIN_DERIVATIVE:
            step = c - value / deriv
            c = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            c = 0.5 * (lo + hi)
    raise NonConvergenceError(
        f"scale-equation Newton did not reach |residual| <= {cfg.tol:g} in "
        f"{cfg.max_iters} iterations (last residual {value:.3e})",
        last_residual=value,
    )


def _initial_scale(cfg, y_for_init, bracket_max):
    if isinstance(cfg.init, str):  # "variance"
        if y_for_init is None:
            raise ValueError("variance initialization needs y_for_init")
        var = float(np.var(np.asarray(y_for_init, dtype=np.float64)))
        if not np.isfinite(var) or var <= 0.0:
            return 1.0  # degenerate constant response
        return min(2.0 / var, bracket_max)
    return min(float(cfg.init), bracket_max)


def solve_scale(yhat, family, cfg=None, y_for_init=None):
    """Solve the scale equation for the fitted values yhat.

    Returns (c, RootTrace) with |(c/n) sum psi2(c yhat_i) - 1| <= cfg.tol.
    Raises NoRootError when no sign change exists on (0, bracket_max] and
    NonConvergenceError when the iteration budget runs out.
    """
    cfg = cfg or ScaleSolveConfig()
    yhat = np.ascontiguousarray(yhat, dtype=np.float64)
    if yhat.size == 0:
        raise ValueError("yhat must be nonempty")
    if not np.all(np.isfinite(yhat)):
        raise ValueError("yhat must be finite")
    family = as_family(family)
    init = _initial_scale(cfg, y_for_init, cfg.bracket_max)
    return _solve_scalar_root(yhat, family, 1.0, init, cfg)


def fit_sls(data, family, subsample=None, cfg=None, seed=0):
    """Scaled least squares: OLS, then rescale by the scale-equation root.

    The fitted values and the variance initialization only ever see
    training rows. Deterministic for a fixed seed.
    """
    cfg = cfg or ScaleSolveConfig()
    family = as_family(family)
    t0 = time.perf_counter()
    ols = fit_ols(data, subsample=subsample, seed=seed)
    yhat = data.train_X @ ols.beta
    t1 = time.perf_counter()
    c, trace = solve_scale(yhat, family, cfg, y_for_init=data.train_y)
    t2 = time.perf_counter()
    return SlsResult(
        beta_sls=c * ols.beta,
        beta_ols=ols.beta,
        c=c,
        root_trace=trace,
        wall_time_seconds=t2 - t0,
        ols_seconds=t1 - t0,
        scale_seconds=t2 - t1,
    )


def fit_sls_ridge(data, family, lam, cfg=None):
    """Ridge-regularized scaled least squares.

    The penalized problem at strength lam maps to ordinary ridge at the
    rescaled strength gamma = lam * c, which depends on the unknown c, so
    the pair is solved by fixed-point iteration: fit ridge at gamma_k =
    lam * c_k, re-solve the scale equation on its fitted values, repeat
    until c stabilizes. lam = 0 reduces exactly to fit_sls.
    """
    if lam < 0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")
    cfg = cfg or ScaleSolveConfig()
    family = as_family(family)
    t0 = time.perf_counter()
    c_k = 1.0
    delta = float("inf")
    for outer in range(50):
        fit = fit_ridge(data, lam * c_k)
        yhat = data.train_X @ fit.beta
        inner_cfg = cfg if outer == 0 else ScaleSolveConfig(
            init=c_k, tol=cfg.tol, max_iters=cfg.max_iters,
            bracket_max=cfg.bracket_max,
        )
        c_new, trace = solve_scale(yhat, family, inner_cfg, y_for_init=data.train_y)
        delta = abs(c_new - c_k)
        if delta <= cfg.tol * (1.0 + abs(c_k)):
            t1 = time.perf_counter()
            return SlsResult(
                beta_sls=c_new * fit.beta,
                beta_ols=fit.beta,
                c=c_new,
                root_trace=trace,
                wall_time_seconds=t1 - t0,
                scale_seconds=t1 - t0,
            )
        c_k = c_new
    raise NonConvergenceError(
        "ridge scale fixed point did not stabilize within 50 outer iterations",
        last_residual=delta,
    )
