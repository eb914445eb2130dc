"""Package-wide base exceptions for slotswap."""


class SlotSwapError(Exception):
    """Base exception for all slotswap errors."""
    pass


class ValidationError(SlotSwapError, ValueError):
    """Raised when inputs are rejected before any side effect happens.

    The command-line interface maps every subclass of this error to exit
    code 1; any other ``SlotSwapError`` maps to exit code 2.
    """
    pass
