"""Pure-numpy implementations of the hot evaluation kernels.

Mirrors ``scaledls._backend._kernels`` (the Cython module) exactly: same
family codes, same signatures, same overflow reporting. Used when the
compiled extension is unavailable or disabled via SCALEDLS_BACKEND=numpy.

All functions return a ``bad`` index alongside their result: -1 when the
evaluation stayed in range, otherwise the position of the first Poisson
argument whose magnitude exceeds the exp cap. Callers raise on bad >= 0
and must not use the accompanying values.
"""

import numpy as np
from scipy.special import expit

LINEAR = 0
LOGISTIC = 1
POISSON = 2
SQUARE_LINK = 3
BOOSTING_LINK = 4

# exp(710) overflows an IEEE double; 700 leaves headroom for derivatives.
POISSON_ARG_CAP = 700.0


def _poisson_bad(z):
    over = np.abs(z) > POISSON_ARG_CAP
    return int(np.argmax(over)) if over.any() else -1


def _ladder_values(code, order, z):
    if code == LINEAR:
        if order == 0:
            return 0.5 * z * z
        if order == 1:
            return z.copy()
        if order == 2:
            return np.ones_like(z)
        return np.zeros_like(z)
    if code == LOGISTIC:
        if order == 0:
            return np.logaddexp(0.0, z)
        s = expit(z)
        if order == 1:
            return s
        v = s * (1.0 - s)
        if order == 2:
            return v
        if order == 3:
            return v * (1.0 - 2.0 * s)
        return v * (1.0 - 6.0 * s + 6.0 * s * s)
    if code == POISSON:
        return np.exp(z)
    if code == SQUARE_LINK:
        if order == 0:
            return 0.5 * z + 0.25 * z * z
        if order == 1:
            return 0.5 + 0.5 * z
        if order == 2:
            return np.full_like(z, 0.5)
        return np.zeros_like(z)
    if code == BOOSTING_LINK:
        s = np.sqrt(0.25 * z * z + 1.0)
        if order == 0:
            return 0.5 * z + s - 1.0
        if order == 1:
            return 0.5 + 0.25 * z / s
        if order == 2:
            return 0.25 / s**3
        if order == 3:
            return -0.1875 * z / s**5
        return 0.1875 * (z * z - 1.0) / s**7
    raise ValueError(f"unknown family code {code}")


def ladder(code, order, z):
    """Elementwise derivative of the family nonlinearity: psi^(order)(z)."""
    if code == POISSON:
        bad = _poisson_bad(z)
        if bad >= 0:
            return np.zeros_like(z), bad
    return _ladder_values(code, order, z), -1


def scale_terms(code, c, yhat):
    """Fused sums for the scale equation at multiplier c.

    Returns (sum psi2(c*yhat), sum psi2(c*yhat) + c*yhat*psi3(c*yhat), bad).
    """
    t = c * yhat
    if code == POISSON:
        bad = _poisson_bad(t)
        if bad >= 0:
            return 0.0, 0.0, bad
        e = np.exp(t)
        return float(e.sum()), float((e * (1.0 + t)).sum()), -1
    p2 = _ladder_values(code, 2, t)
    p3 = _ladder_values(code, 3, t)
    return float(p2.sum()), float((p2 + t * p3).sum()), -1


def risk_terms(code, z, y):
    """Sum of psi(z_i) - y_i * z_i over all elements."""
    if code == POISSON:
        bad = _poisson_bad(z)
        if bad >= 0:
            return 0.0, bad
    p0 = _ladder_values(code, 0, z)
    return float((p0 - y * z).sum()), -1
