class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class InseparableDataError(ValidationError):
    """Raised when a hard-margin separator is requested for inseparable data."""
