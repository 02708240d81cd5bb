"""Exception hierarchy.

Data problems (bad input, windows that do not fit) derive from
:class:`DataError`; failures of a numerical procedure derive from
:class:`NumericError`. The CLI maps them to exit codes 3 and 4.
"""


class FxStringsError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = {k: v for k, v in context.items() if v is not None}

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), **self.context}


class DataError(FxStringsError, ValueError):
    pass


class NumericError(FxStringsError, ArithmeticError):
    pass


class MalformedLine(DataError):
    def __init__(self, message, line=None, **context):
        super().__init__(message, line=line, **context)
        self.line = line


class NonMonotoneTimestamp(MalformedLine):
    pass


class InvertedSpread(MalformedLine):
    pass


class NonPositivePrice(MalformedLine):
    pass


class EmptyWindow(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class GridMismatch(DataError):
    pass


class EmptyDistances(DataError):
    pass


class EmptyHistory(DataError):
    pass


class NoQualifyingWindows(DataError):
    pass


class InvalidParams(DataError):
    pass


class AllDenominatorsZero(NumericError):
    pass


class InsufficientFitPoints(NumericError):
    pass
