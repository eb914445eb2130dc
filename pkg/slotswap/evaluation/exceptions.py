"""Custom exceptions for model evaluation."""

from typing import Dict, Optional

from slotswap.exceptions import SlotSwapError, ValidationError


class EvaluationError(SlotSwapError):
    """Base exception for evaluation errors."""
    pass


class EvaluationVoidError(EvaluationError):
    """Raised when probes are not accurate enough on real data to grade with.

    Attributes:
        accuracy: Held-out accuracy per attribute
        threshold: Required accuracy
    """

    def __init__(self, accuracy: Dict[str, float], threshold: float, message: Optional[str] = None):
        self.accuracy = dict(accuracy)
        self.threshold = threshold
        failing = {a: acc for a, acc in accuracy.items() if acc < threshold}
        super().__init__(
            message
            or "Evaluation void: probe accuracy below "
            f"{threshold:.2f} for " + ", ".join(f"{a}={acc:.3f}" for a, acc in failing.items())
        )


class EvaluationInputError(EvaluationError, ValidationError):
    """Raised when evaluation inputs are invalid (e.g. sample_count = 0)."""
    pass
