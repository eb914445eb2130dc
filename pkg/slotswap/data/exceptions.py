"""Custom exceptions for dataset generation, ingestion and sampling."""

from slotswap.exceptions import SlotSwapError, ValidationError


class DatasetError(SlotSwapError):
    """Base exception for dataset errors (including I/O failures)."""
    pass


class DatasetValidationError(DatasetError, ValidationError):
    """Raised when a sprite config or a label map is invalid."""
    pass


class MalformedRecordError(DatasetValidationError):
    """Raised when a manifest record cannot be parsed or validated.

    Attributes:
        line_number: 1-based line of the record in the manifest file
        record: Raw record text or path (if available)
    """

    def __init__(self, message: str, line_number: int = None, record: str = None):
        """Initialize malformed record error.

        Args:
            message: Error message
            line_number: 1-based line of the record
            record: Raw record text or path
        """
        super().__init__(message)
        self.line_number = line_number
        self.record = record

    def __str__(self) -> str:
        """Return string representation of error."""
        location = f"line {self.line_number}" if self.line_number else "record"
        if self.record:
            return f"Malformed manifest {location} ({self.record}): {self.args[0]}"
        return f"Malformed manifest {location}: {self.args[0]}"


class SchemaMismatchError(DatasetValidationError):
    """Raised when a manifest and its schema file disagree."""
    pass


class SamplingError(DatasetValidationError):
    """Raised when a batch cannot be sampled (e.g. empty domain)."""
    pass
