class TDCISError(Exception):
    """Base class for errors raised by the package."""


class ConfigurationError(TDCISError, ValueError):
    """Invalid or inconsistent input parameters."""


class NumericalError(TDCISError, RuntimeError):
    """A numerical procedure failed to converge or produced non-finite data.

    Extra diagnostics (iteration counts, residual histories, step indices)
    are kept in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details
