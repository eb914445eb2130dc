"""Custom exceptions for slot editing and the average-vector registry."""

from slotswap.exceptions import SlotSwapError, ValidationError


class SlotError(SlotSwapError):
    """Base exception for slot-code errors."""
    pass


class SlotShapeError(SlotError, ValidationError):
    """Raised when a latent or slot tensor does not match the layout."""
    pass


class SlotIndexError(SlotError, ValidationError):
    """Raised when an attribute slot index is outside [0, n)."""

    def __init__(self, attr_index: int, n: int):
        """Initialize index error.

        Args:
            attr_index: Requested slot index
            n: Number of attribute slots
        """
        self.attr_index = attr_index
        self.n = n
        super().__init__(f"Attribute slot {attr_index} outside [0, {n})")


class EditValidationError(SlotError, ValidationError):
    """Raised when a multiplex edit list is invalid (e.g. duplicate attributes)."""
    pass


class RegistryNotReadyError(SlotError, ValidationError):
    """Raised when an average vector is requested for an empty registry entry.

    Attributes:
        attribute: Attribute name
        value: Value name
    """

    def __init__(self, attribute: str, value: str):
        self.attribute = attribute
        self.value = value
        super().__init__(f"No average vector recorded for {attribute}={value}")
