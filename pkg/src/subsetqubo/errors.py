"""Exception types shared across the package."""


class SubsetSumError(Exception):
    """Base class for all errors raised by this package."""


class EmptyValues(SubsetSumError, ValueError):
    pass


class MagnitudeOverflow(SubsetSumError, ValueError):
    pass


class TooManyValues(SubsetSumError, ValueError):
    pass


class DimensionMismatch(SubsetSumError, ValueError):
    pass


class ParseError(SubsetSumError, ValueError):
    """Malformed input document; the message carries line/field or cell context."""


class InstanceTooLarge(SubsetSumError, ValueError):
    pass


class RangeTooLarge(SubsetSumError, ValueError):
    pass


class DegenerateModel(SubsetSumError, ValueError):
    pass


class ScopeTooSmall(SubsetSumError, ValueError):
    pass


class BadReference(SubsetSumError, ValueError):
    pass


class NoSolutionFound(SubsetSumError):
    """Raised by solvers in strict mode; the unsuccessful report is attached."""

    def __init__(self, report, message="no verified solution found"):
        super().__init__(message)
        self.report = report
