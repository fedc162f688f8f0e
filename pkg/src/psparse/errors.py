"""Exception hierarchy shared by all psparse modules."""


class PSparseError(ValueError):
    """Base class for every error raised by psparse."""


class FormatError(PSparseError):
    """A sparse matrix violates its storage-format invariants."""


class DimensionError(PSparseError):
    """Vector or matrix dimensions do not agree."""


class MatrixMarketError(PSparseError):
    """Malformed Matrix Market input. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class PartitionError(PSparseError):
    """Invalid partition request or corrupted partition set."""


class UnsupportedOrderError(PartitionError):
    """COO input is not sorted by row."""


class PlanMismatchError(PSparseError):
    """A partition plan does not fit the matrix it is applied to."""


class FitError(PSparseError):
    """Power-law exponent cannot be fitted (fewer than two distinct degrees)."""
