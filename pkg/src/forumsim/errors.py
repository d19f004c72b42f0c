class ForumsimError(Exception):
    """Base class for all package errors."""


class ParamError(ForumsimError, ValueError):
    """Invalid model parameters, sweep plan or run configuration."""


class DataError(ForumsimError, ValueError):
    """Input data that cannot be analysed."""


class LogFormatError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EmptyMetricsError(DataError):
    pass


class FitError(DataError):
    """Too few bins, an empty fit range, or a degenerate fit."""
