"""Custom exceptions for training and checkpoints."""

from typing import TYPE_CHECKING, Optional

from slotswap.exceptions import SlotSwapError, ValidationError

if TYPE_CHECKING:
    from slotswap.losses import LossReport


class TrainingError(SlotSwapError):
    """Base exception for training errors."""
    pass


class TrainConfigError(TrainingError, ValidationError):
    """Raised when a training configuration is invalid."""
    pass


class TrainingDivergenceError(TrainingError):
    """Raised when a step produces a non-finite or exploding loss.

    Attributes:
        report: Loss components of the offending step
        iteration: Iteration in progress when training diverged
    """

    def __init__(self, message: str, report: "LossReport", iteration: Optional[int] = None):
        """Initialize divergence error.

        Args:
            message: Error message
            report: Loss components of the offending step
            iteration: Iteration in progress
        """
        super().__init__(message)
        self.report = report
        self.iteration = iteration

    def __str__(self) -> str:
        """Return string representation of error."""
        where = f" at iteration {self.iteration}" if self.iteration is not None else ""
        return (
            f"{self.args[0]}{where} (value_key={self.report.value_key}, "
            f"gen={self.report.generator_total}, dis={self.report.discriminator})"
        )


class CheckpointError(TrainingError):
    """Raised when a checkpoint cannot be written, read or validated."""
    pass
