"""Exception types shared across the simulator."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(ValueError):
    """An (N, k, P, mode) combination the processor cannot run."""


class ModeUnsupportedError(ConfigurationError):
    """Transform length outside the range a computational mode supports."""


class ConflictError(RuntimeError):
    """A memory access schedule overwrote or re-read a bank location."""

    def __init__(self, message, count=0, first=None):
        super().__init__(message)
        self.count = count
        self.first = first


class NumericError(ArithmeticError):
    """Non-finite values appeared in the datapath."""


class SearchFailure(RuntimeError):
    """No reshuffle swap sequence exists within the step bound."""


class NeedsNewProbeError(ValueError):
    """Output order recovery was ambiguous for the supplied probe."""
