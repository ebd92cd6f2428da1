"""Exception types shared across the package."""


class ShockAsymError(Exception):
    """Base class for all library errors."""


class UsageError(ShockAsymError):
    """An operation was called with arguments violating its contract."""


class DomainError(ShockAsymError):
    """An argument lies outside the mathematical domain of the operation."""


class DegenerateShockError(DomainError):
    """The two boundary states coincide; no shock configuration exists."""


class SequencingError(UsageError):
    """A recurrence entry was requested before its dependencies exist."""


class PoleProximityError(ShockAsymError):
    """Evaluation point too close to a pole of a characteristic series."""


class CoverageError(ShockAsymError):
    """A gridded field does not cover the support needed by a quadrature."""


class RangeOverflowError(ShockAsymError):
    """Arguments so extreme that double-precision evaluation would overflow."""


class InstabilityError(ShockAsymError):
    """A time-stepping scheme produced non-finite values."""
