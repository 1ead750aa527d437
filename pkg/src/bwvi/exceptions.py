"""Exception types raised across the toolkit."""


class BwviError(Exception):
    """Base class for toolkit errors."""


class StepTooLarge(BwviError):
    """The update matrix ``I - eta * S`` is numerically singular."""


class NonFiniteWeight(BwviError):
    """A log importance weight evaluated to NaN or +inf.

    ``trace`` and ``state`` are filled in by the optimizers so callers can
    inspect the run up to the failure.
    """

    def __init__(self, message, trace=None, state=None):
        super().__init__(message)
        self.trace = trace
        self.state = state


class HessianUnavailable(BwviError):
    pass


class InvalidPoint(BwviError):
    """The evaluation point has zero importance weight."""


class DegenerateVariance(BwviError):
    """A replicate set has zero sample variance, so its SNR is undefined."""


class DimensionMismatch(BwviError, ValueError):
    pass


class ParseError(BwviError, ValueError):
    pass


class MissingColumn(BwviError, KeyError):
    pass


class NonNumeric(BwviError, ValueError):
    pass


class ZeroVariance(BwviError, ValueError):
    pass


class ConfigError(BwviError, ValueError):
    """Invalid experiment configuration; the message names the offending key."""
