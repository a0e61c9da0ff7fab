"""Exception types shared across the library."""


class MinlabError(Exception):
    """Base class for all library-specific errors."""


class MalformedExpressionError(MinlabError, ValueError):
    """A rate expression does not follow the polynomial grammar."""


class NegativeRateError(MinlabError, ValueError):
    """An off-diagonal rate or a diagonal rate is negative."""


class SuperConservativeError(MinlabError, ValueError):
    """A row's off-diagonal sum exceeds its diagonal rate beyond tolerance."""


class InfiniteSupportError(MinlabError, ValueError):
    """A row oracle produced more entries than any finite row may have."""


class NonFiniteInputError(MinlabError, ValueError):
    """A rate, time, or parameter is NaN or infinite."""


class WindowTooSmallError(MinlabError, ValueError):
    """A stopped truncation's window cap does not cover some row's support."""


class BoundaryViolationError(MinlabError, ValueError):
    """A general-boundary oracle broke nonnegativity or sub-conservativity."""


class MonotonicityViolationError(MinlabError, RuntimeError):
    """A quantity that must be monotone across truncation levels decreased;
    signals an implementation bug, not a property of the input."""


class SingularSystemError(MinlabError, RuntimeError):
    """A resolvent linear system could not be solved."""


class BadLambdaError(MinlabError, ValueError):
    """Resolvent parameter lambda must be positive and finite."""


class NotConservativeError(MinlabError, ValueError):
    """An operation requiring zero row defects was given a killing matrix."""


class NegativePhiError(MinlabError, ValueError):
    """A drift test function took a negative value."""


class ZeroBirthRateError(MinlabError, ValueError):
    """The regularity series needs strictly positive birth rates."""


class NotSingleBirthError(MinlabError, ValueError):
    """The matrix is not single-birth on the checked range."""


class PreconditionFailedError(MinlabError, ValueError):
    """A comparison-transfer precondition (dominance or regularity evidence)
    does not hold."""


class DominancePreconditionFailedError(MinlabError, ValueError):
    """Generator dominance does not hold on the probed rows."""


class WitnessNotFoundError(MinlabError, RuntimeError):
    """A grid search expected to produce a witness exhausted its grid.

    The partially filled report, when available, is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
