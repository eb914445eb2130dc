"""Custom exceptions for attribute schema operations."""

from slotswap.exceptions import SlotSwapError, ValidationError


class SchemaError(SlotSwapError):
    """Base exception for schema-related errors."""
    pass


class SchemaValidationError(SchemaError, ValidationError):
    """Raised when a schema or slot layout violates its invariants."""
    pass


class SchemaLookupError(SchemaError, ValidationError):
    """Raised when an attribute or value name is not part of the schema.

    Attributes:
        attribute: Attribute name that was looked up
        value: Value name that was looked up (if any)
    """

    def __init__(self, message: str, attribute: str = None, value: str = None):
        """Initialize lookup error.

        Args:
            message: Error message
            attribute: Attribute name that was looked up
            value: Value name that was looked up
        """
        super().__init__(message)
        self.attribute = attribute
        self.value = value
