# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels for the closed-form loss families.

Single-pass, allocation-free versions of the numpy fallback in
``numpy_impl.py``. The function signatures and family codes must stay in
lockstep with that module; ``tests/test_backend.py`` pins the agreement.
"""

import numpy as np

from libc.math cimport exp, fabs, log1p, sqrt

LINEAR = 0
LOGISTIC = 1
POISSON = 2
SQUARE_LINK = 3
BOOSTING_LINK = 4

POISSON_ARG_CAP = 700.0

cdef double _CAP = 700.0


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline double _softplus(double z) noexcept nogil:
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double _psi(int code, int order, double t) noexcept nogil:
    cdef double s, sg, v
    if code == 0:  # linear
        if order == 0:
            return 0.5 * t * t
        if order == 1:
            return t
        if order == 2:
            return 1.0
        return 0.0
    if code == 1:  # logistic
        if order == 0:
            return _softplus(t)
        sg = _sigmoid(t)
        if order == 1:
            return sg
        v = sg * (1.0 - sg)
        if order == 2:
            return v
        if order == 3:
            return v * (1.0 - 2.0 * sg)
        return v * (1.0 - 6.0 * sg + 6.0 * sg * sg)
    if code == 2:  # poisson; caller enforces the cap
        return exp(t)
    if code == 3:  # square-loss canonical link, integrated
        if order == 0:
            return 0.5 * t + 0.25 * t * t
        if order == 1:
            return 0.5 + 0.5 * t
        if order == 2:
            return 0.5
        return 0.0
    # boosting canonical link, integrated
    s = sqrt(0.25 * t * t + 1.0)
    if order == 0:
        return 0.5 * t + s - 1.0
    if order == 1:
        return 0.5 + 0.25 * t / s
    if order == 2:
        return 0.25 / (s * s * s)
    if order == 3:
        return -0.1875 * t / (s * s * s * s * s)
    return 0.1875 * (t * t - 1.0) / (s * s * s * s * s * s * s)


def ladder(int code, int order, double[::1] z):
    """Elementwise derivative of the family nonlinearity: psi^(order)(z)."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, bad = -1
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        if code == 2:
            for i in range(n):
                if fabs(z[i]) > _CAP:
                    bad = i
                    break
                out[i] = exp(z[i])
        else:
            for i in range(n):
                out[i] = _psi(code, order, z[i])
    return out_arr, bad


def scale_terms(int code, double c, double[::1] yhat):
    """Fused sums for the scale equation at multiplier c.

    Returns (sum psi2(c*yhat), sum psi2(c*yhat) + c*yhat*psi3(c*yhat), bad).
    """
    cdef Py_ssize_t n = yhat.shape[0]
    cdef Py_ssize_t i, bad = -1
    cdef double s2 = 0.0, sd = 0.0
    cdef double t, sg, v, s, p2, p3, e
    with nogil:
        if code == 0:
            s2 = <double> n
            sd = <double> n
        elif code == 1:
            for i in range(n):
                t = c * yhat[i]
                sg = _sigmoid(t)
                v = sg * (1.0 - sg)
                s2 += v
                sd += v * (1.0 + t * (1.0 - 2.0 * sg))
        elif code == 2:
            for i in range(n):
                t = c * yhat[i]
                if fabs(t) > _CAP:
                    bad = i
                    break
                e = exp(t)
                s2 += e
                sd += e * (1.0 + t)
        elif code == 3:
            s2 = 0.5 * n
            sd = 0.5 * n
        else:
            for i in range(n):
                t = c * yhat[i]
                s = sqrt(0.25 * t * t + 1.0)
                p2 = 0.25 / (s * s * s)
                p3 = -0.1875 * t / (s * s * s * s * s)
                s2 += p2
                sd += p2 + t * p3
    if bad >= 0:
        return 0.0, 0.0, bad
    return s2, sd, -1


def risk_terms(int code, double[::1] z, double[::1] y):
    """Sum of psi(z_i) - y_i * z_i over all elements."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, bad = -1
    cdef double total = 0.0
    with nogil:
        if code == 2:
            for i in range(n):
                if fabs(z[i]) > _CAP:
                    bad = i
                    break
                total += exp(z[i]) - y[i] * z[i]
        else:
            for i in range(n):
                total += _psi(code, 0, z[i]) - y[i] * z[i]
    if bad >= 0:
        return 0.0, bad
    return total, -1
