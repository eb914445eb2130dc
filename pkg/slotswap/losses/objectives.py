"""Transfer, discrimination, back-transfer and attribute-consistency objectives.

Every loss here is minimized. The generator's adversarial term uses the
non-saturating ``-log D(x_trans)`` form.
"""

import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Mapping, Union

import torch
import torch.nn.functional as F

from slotswap.losses.exceptions import LossConfigError, LossInputError

PROBABILITY_EPS = 1e-7
METRICS = ("l1", "l2", "huber")
ATTR_TARGETS = ("reference", "transferred")

Scalar = Union[float, torch.Tensor]


@dataclass(frozen=True)
class LossWeights:
    """Importance weights of the generation loss and the distance metric.

    Attributes:
        lambda1: Weight of the transfer (adversarial) term
        lambda2: Weight of the back-transfer term
        lambda3: Weight of the attribute-consistency term
        metric: Distance metric, one of 'l1', 'l2', 'huber'
        huber_delta: Huber threshold (only used with metric 'huber')
        attr_target: 'reference' matches x_attr to x_ref; 'transferred'
            matches it to x_trans
    """
    lambda1: float = 1.0
    lambda2: float = 10.0
    lambda3: float = 10.0
    metric: str = "l1"
    huber_delta: float = 1.0
    attr_target: str = "reference"

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise LossConfigError(f"{name} must be a finite non-negative number, got {value}")
        if self.lambda1 == self.lambda2 == self.lambda3 == 0:
            raise LossConfigError("At least one loss weight must be positive")
        if self.metric not in METRICS:
            raise LossConfigError(f"metric must be one of {METRICS}, got '{self.metric}'")
        if not self.huber_delta > 0:
            raise LossConfigError(f"huber_delta must be positive, got {self.huber_delta}")
        if self.attr_target not in ATTR_TARGETS:
            raise LossConfigError(
                f"attr_target must be one of {ATTR_TARGETS}, got '{self.attr_target}'"
            )

    @classmethod
    def from_alpha(cls, alpha: float, **kwargs: Any) -> "LossWeights":
        """Two-term blend ``alpha * reconstruction + (1 - alpha) * adversarial``.

        Examples:
            >>> LossWeights.from_alpha(0.3)
            LossWeights(lambda1=0.7, lambda2=0.3, lambda3=0.0, ...)
        """
        if not 0.0 <= alpha <= 1.0:
            raise LossConfigError(f"alpha must be in [0, 1], got {alpha}")
        return cls(lambda1=1.0 - alpha, lambda2=alpha, lambda3=0.0, **kwargs)

    def for_domain(self) -> "LossWeights":
        """Weights for domain-level training (attribute consistency off)."""
        if self.lambda3 == 0:
            return self
        return replace(self, lambda3=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LossWeights":
        """Build weights from a ``loss`` settings section.

        A non-null ``alpha`` takes precedence over the three lambdas.

        Raises:
            LossConfigError: On unknown keys or invalid values
        """
        allowed = {"lambda1", "lambda2", "lambda3", "metric", "huber_delta", "attr_target", "alpha"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise LossConfigError(f"Unknown loss keys: {', '.join(unknown)}")
        extra = {
            "metric": str(data.get("metric", "l1")).lower(),
            "huber_delta": float(data.get("huber_delta", 1.0)),
            "attr_target": str(data.get("attr_target", "reference")),
        }
        if data.get("alpha") is not None:
            return cls.from_alpha(float(data["alpha"]), **extra)
        return cls(
            lambda1=float(data.get("lambda1", 1.0)),
            lambda2=float(data.get("lambda2", 10.0)),
            lambda3=float(data.get("lambda3", 10.0)),
            **extra,
        )


def probability_eps(dtype: torch.dtype) -> float:
    """Clamp margin keeping both p and 1 - p representable and non-zero in ``dtype``."""
    return max(PROBABILITY_EPS, float(torch.finfo(dtype).eps))


def _check_probs(p: torch.Tensor, what: str) -> torch.Tensor:
    if p.numel() == 0:
        raise LossInputError(f"{what} is empty")
    eps = probability_eps(p.dtype)
    return p.clamp(eps, 1.0 - eps)


def transfer_loss(d_probs_on_trans: torch.Tensor) -> torch.Tensor:
    """-mean(log D_v(x_trans)).

    Raises:
        LossInputError: If the batch is empty

    Examples:
        >>> transfer_loss(torch.tensor([0.5, 0.5]))
        tensor(0.6931)
    """
    p = _check_probs(d_probs_on_trans, "d_probs_on_trans")
    return -torch.log(p).mean()


def discriminator_loss(d_probs_on_trans: torch.Tensor, d_probs_on_real: torch.Tensor) -> torch.Tensor:
    """-mean(log(1 - D_v(x_trans))) - mean(log D_v(x_ref)).

    Raises:
        LossInputError: If either batch is empty
    """
    fake = _check_probs(d_probs_on_trans, "d_probs_on_trans")
    real = _check_probs(d_probs_on_real, "d_probs_on_real")
    return -torch.log1p(-fake).mean() - torch.log(real).mean()


def _check_logits(logits: torch.Tensor, what: str) -> torch.Tensor:
    if logits.numel() == 0:
        raise LossInputError(f"{what} is empty")
    return logits


def transfer_loss_from_logits(d_logits_on_trans: torch.Tensor) -> torch.Tensor:
    """``transfer_loss`` on D_v's pre-sigmoid scores.

    Equal to ``transfer_loss(sigmoid(logits))`` wherever the probability is
    not clamped, and keeps a gradient when D_v saturates.

    Raises:
        LossInputError: If the batch is empty
    """
    return -F.logsigmoid(_check_logits(d_logits_on_trans, "d_logits_on_trans")).mean()


def discriminator_loss_from_logits(
    d_logits_on_trans: torch.Tensor,
    d_logits_on_real: torch.Tensor,
) -> torch.Tensor:
    """``discriminator_loss`` on D_v's pre-sigmoid scores (log(1 - sigmoid(l)) = logsigmoid(-l)).

    Raises:
        LossInputError: If either batch is empty
    """
    fake = _check_logits(d_logits_on_trans, "d_logits_on_trans")
    real = _check_logits(d_logits_on_real, "d_logits_on_real")
    return -F.logsigmoid(-fake).mean() - F.logsigmoid(real).mean()


def distance(
    a: torch.Tensor,
    b: torch.Tensor,
    metric: str = "l1",
    huber_delta: float = 1.0,
) -> torch.Tensor:
    """Mean elementwise distance between two equally shaped batches.

    Raises:
        LossInputError: On shape mismatch or an empty batch
        LossConfigError: On an unknown metric
    """
    if a.shape != b.shape:
        raise LossInputError(f"Shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.numel() == 0:
        raise LossInputError("Cannot compute a distance over an empty batch")
    if metric == "l1":
        return F.l1_loss(a, b)
    if metric == "l2":
        return F.mse_loss(a, b)
    if metric == "huber":
        return F.huber_loss(a, b, delta=huber_delta)
    raise LossConfigError(f"Unknown metric '{metric}'")


def back_transfer_loss(
    x_src: torch.Tensor,
    x_back: torch.Tensor,
    metric: str = "l1",
    huber_delta: float = 1.0,
) -> torch.Tensor:
    """dist(x_src, x_back): all non-target factors survive the round trip."""
    return distance(x_src, x_back, metric, huber_delta)


def attribute_consistency_loss(
    x_attr: torch.Tensor,
    x_target: torch.Tensor,
    metric: str = "l1",
    huber_delta: float = 1.0,
) -> torch.Tensor:
    """dist(x_attr, x_target); the target is x_ref or x_trans per ``attr_target``."""
    return distance(x_attr, x_target, metric, huber_delta)


def generation_loss(
    transfer: Scalar,
    back: Scalar,
    attr: Scalar,
    weights: LossWeights,
) -> Scalar:
    """lambda1 * transfer + lambda2 * back + lambda3 * attr.

    A zero weight drops its term entirely, so a non-finite component with
    weight zero does not poison the total.
    """
    total: Scalar = 0.0
    for weight, term in ((weights.lambda1, transfer), (weights.lambda2, back), (weights.lambda3, attr)):
        if weight != 0:
            total = total + weight * term
    return total


@dataclass(frozen=True)
class LossReport:
    """Scalar loss components of one training step.

    Attributes:
        value_key: Global index of the attribute value trained in this step
        transfer: Transfer (adversarial) loss
        back: Back-transfer loss
        attr: Attribute-consistency loss (0.0 when the path is not run)
        generator_total: Weighted generation loss
        discriminator: Discrimination loss of D_v
    """
    value_key: int
    transfer: float
    back: float
    attr: float
    generator_total: float
    discriminator: float

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (self.transfer, self.back, self.attr, self.generator_total, self.discriminator)
        )

    def to_record(self, iteration: int) -> Dict[str, Any]:
        """One metrics JSONL record."""
        return {
            "iter": iteration,
            "value_key": self.value_key,
            "transfer": self.transfer,
            "back": self.back,
            "attr": self.attr,
            "gen": self.generator_total,
            "dis": self.discriminator,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "LossReport":
        return cls(
            value_key=int(record["value_key"]),
            transfer=float(record["transfer"]),
            back=float(record["back"]),
            attr=float(record["attr"]),
            generator_total=float(record["gen"]),
            discriminator=float(record["dis"]),
        )
