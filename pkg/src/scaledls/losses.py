"""Loss families for generalized linear problems.

Two kinds of objects live here:

* ``LossFamily`` subclasses expose the scalar nonlinearity psi and its
  derivatives psi^(1)..psi^(4). These drive the empirical risk, the scale
  equation, loss-to-loss conversion, and the curvature-based optimizers.
* ``ScoringRule`` subclasses describe binary-classification losses through
  their partial losses, weight function, and canonical link. Each rule maps
  to a LossFamily whose mean function is the rule's canonical link, so the
  scaling machinery applies unchanged (the family curvature is the link
  derivative).

Closed-form families carry a backend code and evaluate through the compiled
kernels when available; ``CanonicalizedSquareFamily`` wraps user callables
and always evaluates in Python.
"""

from __future__ import annotations

import math

import numpy as np

from . import _backend
from ._backend import (
    BOOSTING_LINK,
    LINEAR,
    LOGISTIC,
    POISSON,
    POISSON_ARG_CAP,
    SQUARE_LINK,
)
from .errors import CurvatureOverflowError, DegenerateCanonicalizationError

MAX_ORDER = 4

# Central-difference step for the canonicalized family, used both for f''
# inside psi2 and for differencing psi2 into the third and fourth orders.
# Wider than textbook: each rounding-jitter of an f' evaluation (~1e-16,
# absolute) is amplified by 1/h when psi2 is formed and by another 1/h^2
# when psi2 is differenced again, so h must be large enough that the chain
# stays below the 1e-5 consistency tolerance; 5e-3 balances that against
# O(h^2) truncation for smooth activations.
_FD_STEP = 5e-3


def _check_order(order):
    if not isinstance(order, (int, np.integer)) or isinstance(order, bool):
        raise ValueError(f"derivative order must be an integer, got {order!r}")
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")


def _check_finite(z, what="z"):
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{what} must be finite")


class LossFamily:
    """A scalar nonlinearity psi with derivatives up to order 4.

    ``derivative(z, order)`` accepts a scalar or 1-d array and validates its
    input; the private ``_ladder`` skips validation and is what the fitting
    code calls on trusted arrays.
    """

    name: str = "abstract"
    code = None  # backend dispatch code for closed-form families
    curvature_bound = None  # sup of psi^(2) when finite

    def derivative(self, z, order):
        _check_order(order)
        arr = np.asarray(z, dtype=np.float64)
        _check_finite(arr)
        out = self._ladder(np.atleast_1d(arr).ravel(), int(order))
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def _ladder(self, z, order):
        if self.code is None:
            raise NotImplementedError
        return _backend.eval_ladder(self.code, order, z)

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class LinearFamily(LossFamily):
    """Least squares: psi(z) = z^2 / 2."""

    name = "linear"
    code = LINEAR
    curvature_bound = 1.0


class LogisticFamily(LossFamily):
    """Logistic regression: psi(z) = log(1 + e^z), evaluated overflow-free."""

    name = "logistic"
    code = LOGISTIC
    curvature_bound = 0.25


class PoissonFamily(LossFamily):
    """Poisson regression: psi(z) = e^z, capped at |z| <= 700."""

    name = "poisson"
    code = POISSON
    curvature_bound = None

    def derivative(self, z, order):
        _check_order(order)
        arr = np.asarray(z, dtype=np.float64)
        _check_finite(arr)
        flat = np.atleast_1d(arr).ravel()
        over = np.abs(flat) > POISSON_ARG_CAP
        if over.any():
            bad = int(np.argmax(over))
            raise CurvatureOverflowError(
                f"poisson argument {flat[bad]!r} at index {bad} exceeds the "
                f"exp cap {POISSON_ARG_CAP}",
                index=bad,
            )
        out = self._ladder(flat, int(order))
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)


class SquareLinkFamily(LossFamily):
    """Family whose mean function is the square-loss canonical link (1+z)/2."""

    name = "square-link"
    code = SQUARE_LINK
    curvature_bound = 0.5


class BoostingLinkFamily(LossFamily):
    """Family whose mean function is the boosting-loss canonical link."""

    name = "boosting-link"
    code = BOOSTING_LINK
    curvature_bound = 0.25


class CanonicalizedSquareFamily(LossFamily):
    """Square loss with activation f, linearized at theta.

    psi(z) = f(z)^2 / (2 f'(theta)). The first derivative comes from the
    chain rule on the user-supplied f and f'; f'' inside psi^(2) and the
    third and fourth orders use central differences (the optimizers only
    need those for the curvature-estimate method, where finite-difference
    accuracy is ample).

    ``f`` and ``fprime`` must accept numpy arrays.
    """

    code = None
    curvature_bound = None

    def __init__(self, f, fprime, theta=0.0):
        d0 = float(np.asarray(fprime(theta), dtype=np.float64))
        if not np.isfinite(d0) or d0 == 0.0:
            raise DegenerateCanonicalizationError(
                f"activation slope at theta={theta} is {d0}; the "
                "canonicalized loss is undefined"
            )
        self.f = f
        self.fprime = fprime
        self.theta = float(theta)
        self._d0 = d0
        self.name = "canonicalized-square"

    def _psi2(self, z):
        h = _FD_STEP
        fpp = (self.fprime(z + h) - self.fprime(z - h)) / (2 * h)
        return (self.fprime(z) ** 2 + self.f(z) * fpp) / self._d0

    def _ladder(self, z, order):
        z = np.asarray(z, dtype=np.float64)
        if order == 0:
            return np.asarray(self.f(z)) ** 2 / (2.0 * self._d0)
        if order == 1:
            return np.asarray(self.f(z)) * np.asarray(self.fprime(z)) / self._d0
        if order == 2:
            return np.asarray(self._psi2(z), dtype=np.float64)
        h = _FD_STEP
        if order == 3:
            return (self._psi2(z + h) - self._psi2(z - h)) / (2 * h)
        return (self._psi2(z + h) - 2.0 * self._psi2(z) + self._psi2(z - h)) / h**2

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"CanonicalizedSquareFamily(theta={self.theta})"


# --------------------------------------------------------------------- #
# Proper scoring rules
# --------------------------------------------------------------------- #


class ScoringRule:
    """A binary proper-scoring loss: partial losses, weight, canonical link.

    ``link_weight_product`` records the constant value of w(q(z)) * q'(z)
    realized by this rule's conventional normalization (the pairing is
    canonical whenever that product is constant; the constant itself is
    arbitrary and differs across rules).
    """

    name: str = "abstract"
    link_weight_product: float = float("nan")

    def link(self, z):
        """Canonical link and its derivative at z: (q(z), q'(z))."""
        raise NotImplementedError

    def partial_losses(self, q):
        """(l0(q), l1(q)): losses against outcomes y=0 and y=1."""
        raise NotImplementedError

    def weight(self, q):
        """Weight w(q); requires q strictly inside (0, 1)."""
        raise NotImplementedError

    def family(self):
        """The LossFamily whose curvature is this rule's link derivative."""
        raise NotImplementedError

    @staticmethod
    def _check_unit_interval(q):
        arr = np.asarray(q, dtype=np.float64)
        if not np.all((arr > 0.0) & (arr < 1.0)):
            raise ValueError("q must lie strictly inside (0, 1)")
        return arr

    def __repr__(self):
        return f"{type(self).__name__}()"


class LogLoss(ScoringRule):
    """Cross entropy; canonical link is the sigmoid."""

    name = "log-loss"
    link_weight_product = 1.0

    def link(self, z):
        _check_finite(z)
        q = float(_backend.eval_ladder(LOGISTIC, 1, np.atleast_1d(z))[0])
        return q, q * (1.0 - q)

    def partial_losses(self, q):
        arr = self._check_unit_interval(q)
        l0 = -np.log1p(-arr)
        l1 = -np.log(arr)
        if np.ndim(q) == 0:
            return float(l0), float(l1)
        return l0, l1

    def weight(self, q):
        arr = self._check_unit_interval(q)
        return 1.0 / (arr * (1.0 - arr))

    def family(self):
        return LogisticFamily()


class BoostingLoss(ScoringRule):
    """Exponential-style boosting loss with its bounded rational link."""

    name = "boosting-loss"
    link_weight_product = 2.0

    def link(self, z):
        _check_finite(z)
        z = float(z)
        s = math.sqrt(0.25 * z * z + 1.0)
        return 0.5 + 0.25 * z / s, 0.25 / s**3

    def partial_losses(self, q):
        arr = self._check_unit_interval(q)
        odds = 1.0 / arr - 1.0
        l0 = odds**-0.5
        l1 = odds**0.5
        if np.ndim(q) == 0:
            return float(l0), float(l1)
        return l0, l1

    def weight(self, q):
        arr = self._check_unit_interval(q)
        return (arr * (1.0 - arr)) ** -1.5

    def family(self):
        return BoostingLinkFamily()


class SquareLoss(ScoringRule):
    """Brier score. The affine link can leave (0, 1); the partial losses are
    plain polynomials and stay defined on all of R, so only ``weight``
    enforces the unit interval."""

    name = "square-loss"
    link_weight_product = 0.5

    def link(self, z):
        _check_finite(z)
        z = float(z)
        return 0.5 * (1.0 + z), 0.5

    def partial_losses(self, q):
        arr = np.asarray(q, dtype=np.float64)
        _check_finite(arr, "q")
        l0 = arr**2
        l1 = (1.0 - arr) ** 2
        if np.ndim(q) == 0:
            return float(l0), float(l1)
        return l0, l1

    def weight(self, q):
        arr = self._check_unit_interval(q)
        return np.ones_like(arr)

    def family(self):
        return SquareLinkFamily()


# --------------------------------------------------------------------- #
# Module-level operations
# --------------------------------------------------------------------- #


def glm_eval(family, z, order):
    """Evaluate psi^(order)(z) for a loss family.

    Accepts a ScoringRule anywhere a family is expected; the rule's induced
    family is used.
    """
    return as_family(family).derivative(z, order)


def scoring_link(rule, z):
    """Canonical link value and derivative (q(z), q'(z)) for a scoring rule."""
    return rule.link(z)


def scoring_partial_losses(rule, q):
    """Partial losses (l0(q), l1(q)) for a scoring rule."""
    return rule.partial_losses(q)


def canonicalize_square_loss(f, fprime, theta=0.0):
    """Build the generalized-linear family approximating square loss with
    activation f around the expansion point theta."""
    return CanonicalizedSquareFamily(f, fprime, theta)


def as_family(obj):
    """Coerce a LossFamily or ScoringRule to a LossFamily."""
    if isinstance(obj, LossFamily):
        return obj
    if isinstance(obj, ScoringRule):
        return obj.family()
    raise TypeError(f"expected a LossFamily or ScoringRule, got {type(obj).__name__}")


_FAMILIES = {
    "linear": LinearFamily,
    "logistic": LogisticFamily,
    "poisson": PoissonFamily,
    "square-link": SquareLinkFamily,
    "boosting-link": BoostingLinkFamily,
}

_RULES = {
    "log-loss": LogLoss,
    "boosting-loss": BoostingLoss,
    "square-loss": SquareLoss,
}


def family_from_name(name):
    """Resolve a family (or scoring-rule) name from the CLI/config surface."""
    key = name.strip().lower()
    if key in _FAMILIES:
        return _FAMILIES[key]()
    if key in _RULES:
        return _RULES[key]().family()
    known = sorted(_FAMILIES) + sorted(_RULES)
    raise ValueError(f"unknown family {name!r}; choose from {known}")
