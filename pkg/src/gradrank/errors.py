"""Exception hierarchy shared by every gradrank module."""


class GradRankError(Exception):
    """Base class for all errors raised by gradrank."""


class EmptyInputError(GradRankError, ValueError):
    pass


class FormatError(GradRankError, ValueError):
    """Malformed input file or record.

    ``line`` is the 1-based line number and ``record`` the 0-based record
    index, whichever applies.
    """

    def __init__(self, message, line=None, record=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record is not None:
            where.append(f"record {record}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.record = record


class ConfigError(GradRankError, ValueError):
    pass


class ShapeError(GradRankError, ValueError):
    pass


class StaleCacheError(GradRankError, RuntimeError):
    """The model was modified after the forward pass that built the cache."""


class DivergenceError(GradRankError, ArithmeticError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DegenerateMapError(GradRankError, ArithmeticError):
    """A constant map has zero spread, so its kurtosis is undefined."""
