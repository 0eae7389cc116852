"""Exception types shared across the package."""


class FieldsenseError(Exception):
    """Base class for package errors."""


class FormatError(FieldsenseError, ValueError):
    """A text file does not match the expected layout.

    ``lineno`` is 1-based and may be ``None`` when the problem is not tied
    to a single line (e.g. a truncated file).
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}"
        if lineno is not None:
            where = f"{where}:{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class DimensionError(FieldsenseError, ValueError):
    """Array shapes or index ranges are inconsistent."""


class IllConditionedError(FieldsenseError, ArithmeticError):
    """The interpolation system C Psi_r is singular or too ill-conditioned."""

    def __init__(self, condition_number, limit):
        self.condition_number = condition_number
        self.limit = limit
        super().__init__(
            f"interpolation system is ill-conditioned "
            f"(condition number {condition_number:.3e} > {limit:.1e})"
        )


class SingularInnovationError(FieldsenseError, ArithmeticError):
    """Kalman innovation covariance cannot be inverted (R_v = 0 case)."""
