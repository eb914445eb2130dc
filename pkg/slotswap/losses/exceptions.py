"""Custom exceptions for training objectives."""

from slotswap.exceptions import SlotSwapError, ValidationError


class LossError(SlotSwapError):
    """Base exception for loss computation errors."""
    pass


class LossInputError(LossError, ValidationError):
    """Raised when loss inputs are empty or have mismatched shapes."""
    pass


class LossConfigError(LossError, ValidationError):
    """Raised when loss weights or metric settings are invalid."""
    pass
