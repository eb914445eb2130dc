"""Custom exceptions for network construction and forward passes."""

from slotswap.exceptions import SlotSwapError, ValidationError


class NetworkError(SlotSwapError):
    """Base exception for network errors."""
    pass


class NetworkConfigError(NetworkError, ValidationError):
    """Raised when a network configuration is invalid."""
    pass


class NetworkShapeError(NetworkError, ValidationError):
    """Raised when a tensor does not match the configured shapes.

    Attributes:
        expected: Expected shape (None entries match any size)
        actual: Actual shape
    """

    def __init__(self, message: str, expected: tuple = None, actual: tuple = None):
        """Initialize shape error.

        Args:
            message: Error message
            expected: Expected shape
            actual: Actual shape
        """
        super().__init__(message)
        self.expected = expected
        self.actual = actual

    def __str__(self) -> str:
        """Return string representation of error."""
        if self.expected is not None:
            return f"{self.args[0]} (expected {self.expected}, got {self.actual})"
        return self.args[0]


class DiscriminatorKeyError(NetworkError, ValidationError):
    """Raised when a discriminator is requested for an unknown value key."""
    pass
