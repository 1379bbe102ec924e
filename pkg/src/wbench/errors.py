"""Exception types shared across the benchmark package."""


class ConfigurationError(ValueError):
    """A user-facing configuration value is invalid (range, missing key, ...)."""


class BackendError(RuntimeError):
    """A circuit execution failed on the chosen backend."""


class MitigationError(RuntimeError):
    """Measurement-error mitigation cannot be applied.

    Carries the condition-number estimate when an ill-conditioned
    calibration matrix is the cause.
    """

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class FitError(RuntimeError):
    """A least-squares fit did not produce a usable result."""


class ParseError(ValueError):
    """A persisted record could not be parsed.

    ``line_number`` is 1-based when the source is a line-delimited file.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SchemaMismatchError(ParseError):
    """A persisted file declares an incompatible schema version."""
