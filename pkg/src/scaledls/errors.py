"""Exception types raised by scaledls."""


class ScaledLSError(Exception):
    """Base class for scaledls runtime failures."""


class SingularDesignError(ScaledLSError):
    """The Gram matrix could not be factorized."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class CurvatureOverflowError(ScaledLSError):
    """A curvature or exponent evaluation left the representable range."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NoRootError(ScaledLSError):
    """No sign change of the scale residual was found on (0, bracket_max]."""


class NonConvergenceError(ScaledLSError):
    """An iteration budget was exhausted before reaching tolerance."""

    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class StalledLineSearchError(ScaledLSError):
    """Backtracking failed to find an acceptable step."""


class DegenerateCanonicalizationError(ScaledLSError):
    """The activation has zero slope at the expansion point."""


class CsvParseError(ScaledLSError):
    """A CSV field failed to parse; carries the 1-based file location."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class InsufficientDataError(ScaledLSError):
    """Too few rows to fit anything."""
