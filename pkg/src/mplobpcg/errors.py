"""Exception and warning classes raised by the solver stack."""


class LinalgError(ArithmeticError):
    """Base class for numerical failures in this package."""


class DimensionMismatch(LinalgError, ValueError):
    pass


class PrecisionMismatch(LinalgError, TypeError):
    pass


class PrecisionOverflow(LinalgError, OverflowError):
    """A value does not fit in the lower precision format."""


class ZeroVector(LinalgError, ValueError):
    pass


class NotPositiveDefinite(LinalgError):
    """A Cholesky pivot was not strictly positive.

    ``index`` is the zero-based row/column of the failing pivot.
    """

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"non-positive pivot at index {self.index}")


class SingularTriangular(LinalgError):
    pass


class NoConvergence(LinalgError):
    pass


class RankDeficient(LinalgError):
    pass


class RankDeficientBasis(RankDeficient):
    """The Gram matrix of a Rayleigh-Ritz basis could not be factored."""


class RankCollapse(LinalgError):
    pass


class ConfigError(ValueError):
    pass


class AssumptionViolated(ValueError):
    pass


class BoundVacuous(ValueError):
    pass


class OutOfInterval(ValueError):
    pass


class GammaTooLarge(ValueError):
    pass


class DenominatorNonpositive(ValueError):
    pass


class ParseError(ValueError):
    """Malformed Matrix Market input; carries the 1-based line number."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NotSquare(ValueError):
    pass


class NotSymmetricHeader(ValueError):
    pass


class NotOrthonormalWarning(RuntimeWarning):
    pass
