"""Exception types shared across the package."""


class SpecFilterError(Exception):
    """Base class for all errors raised by this package."""


class ZeroLeadingDenominator(SpecFilterError):
    """Raised when a filter's raw a[0] coefficient is zero."""


class UnstableFilter(SpecFilterError):
    """Raised when a filter has a pole on or outside the unit circle."""


class StateOwnershipMismatch(SpecFilterError):
    """Raised when a delay-line state is stepped by a filter it does not belong to."""


class InvalidDesignParameters(SpecFilterError):
    """Raised for out-of-range filter design parameters."""


class ZeroOrderFilter(SpecFilterError):
    """Raised when an operation needs filter dynamics but the filter is pure gain."""


class InsufficientHistory(SpecFilterError):
    """Raised when prediction is attempted with fewer than two observed samples."""


class ConfigInvalid(SpecFilterError):
    """Raised for malformed or inconsistent run configuration."""


class WorkerPanicked(SpecFilterError):
    """Raised when a filter worker fails; never silently converted to output."""


class NoSuchWorker(SpecFilterError):
    """Raised when a lifecycle command targets a filter with no worker."""


class IllegalTransition(SpecFilterError):
    """Raised when a lifecycle command is not valid for the worker's current status."""


class MissingBenchmark(SpecFilterError):
    """Raised when a suite is requested without the always-on reference run."""


class LengthMismatch(SpecFilterError):
    """Raised when two traces of different lengths are compared."""


class InputMismatch(SpecFilterError):
    """Raised when two traces being compared were not driven by the same signals."""
