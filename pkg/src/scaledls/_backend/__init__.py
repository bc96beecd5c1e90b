"""Kernel backend selection.

The hot evaluation loops (derivative ladders, scale-equation sums, risk
sums) exist twice: a Cython extension and a numpy fallback with identical
semantics. The compiled module is preferred when importable; set
SCALEDLS_BACKEND=numpy or SCALEDLS_BACKEND=compiled to force a choice.

``benchmarks/backend_bench.py`` compares the two implementations head to
head on large inputs.
"""

import os

import numpy as np

from ..errors import CurvatureOverflowError
from . import numpy_impl

try:
    from . import _kernels
except ImportError:
    _kernels = None

LINEAR = numpy_impl.LINEAR
LOGISTIC = numpy_impl.LOGISTIC
POISSON = numpy_impl.POISSON
SQUARE_LINK = numpy_impl.SQUARE_LINK
BOOSTING_LINK = numpy_impl.BOOSTING_LINK
POISSON_ARG_CAP = numpy_impl.POISSON_ARG_CAP

_requested = os.environ.get("SCALEDLS_BACKEND", "").strip().lower()
if _requested == "numpy":
    _impl = numpy_impl
elif _requested == "compiled":
    if _kernels is None:
        raise ImportError(
            "SCALEDLS_BACKEND=compiled but the scaledls._backend._kernels "
            "extension is not built"
        )
    _impl = _kernels
elif _requested == "":
    _impl = _kernels if _kernels is not None else numpy_impl
else:
    raise ValueError(f"unrecognized SCALEDLS_BACKEND value {_requested!r}")


def backend_name():
    """Name of the active kernel implementation: 'compiled' or 'numpy'."""
    return "compiled" if _impl is _kernels else "numpy"


def compiled_available():
    return _kernels is not None


def _as_vector(z):
    return np.ascontiguousarray(z, dtype=np.float64)


def _raise_overflow(bad, args):
    raise CurvatureOverflowError(
        f"curvature evaluation overflowed at index {bad} "
        f"(argument {args[bad]!r} exceeds the exp cap {POISSON_ARG_CAP})",
        index=bad,
    )


def eval_ladder(code, order, z):
    """psi^(order) over a vector, raising CurvatureOverflowError if out of range."""
    z = _as_vector(z)
    out, bad = _impl.ladder(code, order, z)
    if bad >= 0:
        _raise_overflow(bad, z)
    return out


def scale_sums(code, c, yhat):
    """Raw sums entering the scale equation: (sum psi2, sum psi2 + t*psi3)."""
    yhat = _as_vector(yhat)
    s2, sd, bad = _impl.scale_terms(code, float(c), yhat)
    if bad >= 0:
        _raise_overflow(bad, float(c) * yhat)
    return s2, sd


def risk_sum(code, z, y):
    """Sum of psi(z_i) - y_i z_i."""
    z = _as_vector(z)
    y = _as_vector(y)
    total, bad = _impl.risk_terms(code, z, y)
    if bad >= 0:
        _raise_overflow(bad, z)
    return total
