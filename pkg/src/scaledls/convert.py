"""Convert fitted coefficients from one loss family to another by scaling.

Both families' population minimizers are proportional to the same OLS
vector, so the target coefficients are rho times the source coefficients
where rho solves

    kappa = (rho/n) sum_i psi2_target(rho yhat_i),
    kappa = (1/n) sum_i psi2_source(yhat_i),

with yhat the source-model fitted values. The solve reuses the safeguarded
Newton machinery of the scale equation, starts at rho = 1, and costs O(n)
per iteration; no p x p work is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import as_family
from .sls import ScaleSolveConfig, _residual_terms, _solve_scalar_root


@dataclass
class ConversionResult:
    """Coefficients rescaled into the target family."""

    beta_target: np.ndarray
    rho: float
    kappa: float
    trace: object


def convert_glm(X, beta_source, family_from, family_to, cfg=None):
    """Rescale ``beta_source`` (fitted under ``family_from``) into
    ``family_to`` using the design matrix X.

    X may be any row set whose fitted values represent the source model;
    the default choice is the training design that produced beta_source.
    Restricting the root search to rho > 0 matches the positivity of the
    proportionality constants of convex families.
    """
    cfg = cfg or ScaleSolveConfig()
    family_from = as_family(family_from)
    family_to = as_family(family_to)
    X = np.ascontiguousarray(X, dtype=np.float64)
    beta_source = np.ascontiguousarray(beta_source, dtype=np.float64)
    if X.ndim != 2 or beta_source.ndim != 1 or X.shape[1] != beta_source.shape[0]:
        raise ValueError(
            f"shape mismatch: X {X.shape} against beta of length {beta_source.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")

    yhat = X @ beta_source
    # kappa through the same fused kernel the residual uses, so that
    # converting a family to itself yields a residual of exactly zero at
    # the rho = 1 start.
    kappa_minus, _ = _residual_terms(1.0, yhat, family_from, target=0.0)
    kappa = kappa_minus
    if not np.isfinite(kappa) or kappa <= 0.0:
        raise ValueError(
            f"mean source curvature is {kappa!r}; conversion needs a "
            "positive kappa"
        )
    rho, trace = _solve_scalar_root(yhat, family_to, kappa, 1.0, cfg)
    return ConversionResult(
        beta_target=rho * beta_source, rho=rho, kappa=kappa, trace=trace
    )
