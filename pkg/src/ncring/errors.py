"""Exception types shared across the package."""


class NcRingError(Exception):
    """Base class for all errors raised by this package."""


class ZeroFlux(NcRingError):
    """A signature was requested at f = 0, where both signatures diverge."""


class WindowTooSmall(NcRingError):
    """The level-enumeration window cannot hold the requested filling."""


class NearDegeneracy(NcRingError):
    """A finite-difference stencil straddles a ground-state level crossing."""


class InvalidRange(NcRingError):
    """A flux range or grid request violates its preconditions."""


class TooFewPoints(NcRingError):
    """Not enough samples for the requested differentiation scheme."""


class DegenerateFit(NcRingError):
    """The trace has no usable negative slope; electron count is undefined."""


class InsufficientSignal(NcRingError):
    """Fewer than the minimum usable points above the noise floor.

    This is a meaningful outcome, not a failure: downstream classification
    treats the affected signature as non-divergent.
    """


class NotDetected(NcRingError):
    """Parameter estimation requested for a verdict without a detection."""


class ParseError(NcRingError):
    """A file could not be parsed; carries the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotonicFlux(NcRingError):
    """Trace flux values are not strictly increasing."""


class UnitMismatch(NcRingError):
    """SI-unit data was given without the scales needed to reduce it."""


class EmptySeries(NcRingError):
    """A plot was requested with no series or with a degenerate series."""
