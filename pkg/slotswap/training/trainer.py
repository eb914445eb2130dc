"""Adversarial training of encoder, generator and per-value discriminators.

One iteration visits every attribute value of the schema in order. A step
for value ``v`` samples sources from the whole dataset and references from
v's domain, runs transfer, back-transfer and (instance mode) the attribute
cycle, then updates E and G with the generation loss and D_v with the
discrimination loss.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import torch

from slotswap.core import translate
from slotswap.core.registry import AverageVectorRegistry
from slotswap.core.slots import replace_slot
from slotswap.data import DatasetManifest, sample_indices, to_batch
from slotswap.losses import (
    LossReport,
    LossWeights,
    attribute_consistency_loss,
    back_transfer_loss,
    discriminator_loss_from_logits,
    generation_loss,
    transfer_loss_from_logits,
)
from slotswap.nets import SlotSwapModel
from slotswap.schema import AttributeSchema
from slotswap.training.exceptions import TrainConfigError, TrainingDivergenceError

logger = logging.getLogger(__name__)

TRAIN_MODES = ("instance", "domain")
DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class TrainConfig:
    """Training schedule and optimizer settings.

    Attributes:
        iterations: Number of iterations (each visits all m values)
        batch_size: Sources and references per step
        lr: Learning rate of E and G
        betas: Adam moment coefficients of E and G
        discriminator_lr: Learning rate of every D_v
        discriminator_betas: Adam moment coefficients of every D_v
        weights: Loss weights
        mode: 'instance' (reference slots) or 'domain' (batch-average slots)
        multiplex_augment_prob: Chance of converting one random non-target
            attribute of the sources before each step
        checkpoint_every: Iterations between checkpoints
        seed: Seed of sampling, augmentation and weight initialization
        held_out_fraction: Share of the dataset kept out of training for
            evaluation (0 trains on every image); split by ``seed``
        discriminator_steps: D_v updates per step
        registry_ema_rate: EMA rate of the frozen registry
        divergence_threshold: Abort when |generation loss| exceeds this
        device: Torch device
        dtype: 'float32' or 'float64'
    """
    iterations: int = 8000
    batch_size: int = 16
    lr: float = 2e-4
    betas: Tuple[float, float] = (0.5, 0.999)
    discriminator_lr: float = 2e-4
    discriminator_betas: Tuple[float, float] = (0.5, 0.999)
    weights: LossWeights = field(default_factory=LossWeights)
    mode: str = "instance"
    multiplex_augment_prob: float = 0.0
    checkpoint_every: int = 1000
    seed: int = 0
    held_out_fraction: float = 0.2
    discriminator_steps: int = 1
    registry_ema_rate: float = 0.01
    divergence_threshold: float = 1e4
    device: str = "cpu"
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise TrainConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise TrainConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr < 0 or self.discriminator_lr < 0:
            raise TrainConfigError("Learning rates must be non-negative")
        for name in ("betas", "discriminator_betas"):
            betas = getattr(self, name)
            if len(betas) != 2 or not all(0.0 <= b < 1.0 for b in betas):
                raise TrainConfigError(f"{name} must be two values in [0, 1), got {betas}")
        if self.mode not in TRAIN_MODES:
            raise TrainConfigError(f"mode must be one of {TRAIN_MODES}, got '{self.mode}'")
        if not 0.0 <= self.multiplex_augment_prob <= 1.0:
            raise TrainConfigError(
                f"multiplex_augment_prob must be in [0, 1], got {self.multiplex_augment_prob}"
            )
        if not 0.0 <= self.held_out_fraction < 1.0:
            raise TrainConfigError(
                f"held_out_fraction must be in [0, 1), got {self.held_out_fraction}"
            )
        if self.checkpoint_every < 1:
            raise TrainConfigError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.discriminator_steps < 1:
            raise TrainConfigError(
                f"discriminator_steps must be >= 1, got {self.discriminator_steps}"
            )
        if not 0.0 < self.registry_ema_rate <= 1.0:
            raise TrainConfigError(
                f"registry_ema_rate must be in (0, 1], got {self.registry_ema_rate}"
            )
        if not self.divergence_threshold > 0:
            raise TrainConfigError("divergence_threshold must be positive")
        if self.dtype not in DTYPES:
            raise TrainConfigError(f"dtype must be one of {list(DTYPES)}, got '{self.dtype}'")

    @property
    def effective_weights(self) -> LossWeights:
        """Weights actually used; domain mode forces lambda3 = 0."""
        return self.weights.for_domain() if self.mode == "domain" else self.weights

    @property
    def torch_dtype(self) -> torch.dtype:
        return DTYPES[self.dtype]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["betas"] = list(self.betas)
        data["discriminator_betas"] = list(self.discriminator_betas)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], weights: Optional[LossWeights] = None) -> "TrainConfig":
        """Build a config from a ``training`` section.

        Args:
            data: Section mirroring the dataclass fields
            weights: Loss weights (overrides a nested ``weights`` entry)

        Raises:
            TrainConfigError: On unknown keys or invalid values
        """
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise TrainConfigError(f"Unknown training keys: {', '.join(unknown)}")
        values = dict(data)
        if weights is not None:
            values["weights"] = weights
        elif isinstance(values.get("weights"), Mapping):
            values["weights"] = LossWeights.from_dict(values["weights"])
        for name in ("betas", "discriminator_betas"):
            if name in values:
                values[name] = tuple(float(b) for b in values[name])
        try:
            return cls(**values)
        except TypeError as e:
            raise TrainConfigError(f"Invalid training config: {e}") from e


@dataclass
class TrainState:
    """Everything a training run mutates.

    Attributes:
        config: Training configuration
        model: Networks
        gen_optimizer: Adam over E and G parameters
        disc_optimizers: One Adam per D_v, indexed by global value index
        registry: Minibatch registry used for augmentation during training
        frozen_registry: EMA registry stored for inference
        iteration: Completed iterations
        rng: Source of sampling and augmentation randomness
    """
    config: TrainConfig
    model: SlotSwapModel
    gen_optimizer: torch.optim.Optimizer
    disc_optimizers: List[torch.optim.Optimizer]
    registry: AverageVectorRegistry
    frozen_registry: AverageVectorRegistry
    iteration: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @property
    def schema(self) -> AttributeSchema:
        return self.model.schema


def create_train_state(config: TrainConfig, model: SlotSwapModel) -> TrainState:
    """Optimizers, empty registries and a seeded random source for ``model``."""
    model.train()
    gen_optimizer = torch.optim.Adam(model.generator_parameters(), lr=config.lr, betas=config.betas)
    disc_optimizers = [
        torch.optim.Adam(d.parameters(), lr=config.discriminator_lr, betas=config.discriminator_betas)
        for d in model.discriminators
    ]
    return TrainState(
        config=config,
        model=model,
        gen_optimizer=gen_optimizer,
        disc_optimizers=disc_optimizers,
        registry=AverageVectorRegistry(model.schema, model.layout, mode="minibatch"),
        frozen_registry=AverageVectorRegistry(
            model.schema, model.layout, mode="ema", ema_rate=config.registry_ema_rate
        ),
        iteration=0,
        rng=np.random.default_rng(config.seed),
    )


def augmentation_decision(
    rng: np.random.Generator,
    prob: float,
    n: int,
    target_attr: int,
) -> Optional[int]:
    """Pick a random non-target attribute to convert, or None.

    Nothing is drawn from ``rng`` when ``prob`` is 0 or there is no
    non-target attribute, so a disabled augmentation leaves the random
    stream untouched.

    Examples:
        >>> augmentation_decision(np.random.default_rng(0), 1.0, 2, 0)
        1
    """
    if prob <= 0.0 or n < 2:
        return None
    if rng.random() >= prob:
        return None
    choice = int(rng.integers(n - 1))
    return choice if choice < target_attr else choice + 1


def _load_batch(state: TrainState, manifest: DatasetManifest, indices: List[int]) -> torch.Tensor:
    return to_batch(
        [manifest.load_image(i) for i in indices],
        dtype=state.config.torch_dtype,
        device=state.config.device,
    )


def _augment(state: TrainState, x_src: torch.Tensor, attr_index: int) -> torch.Tensor:
    """Convert attribute ``attr_index`` of every source to one random registry value."""
    attribute = state.schema.names[attr_index]
    ready = state.registry.ready_values(attribute)
    if not ready:
        logger.debug(f"Skipping augmentation of '{attribute}': registry has no entries yet")
        return x_src
    value = ready[int(state.rng.integers(len(ready)))]
    mean = state.registry.mean(attribute, value).to(device=x_src.device, dtype=x_src.dtype)
    with torch.no_grad():
        code = translate.encode(state.model, x_src)
        return translate.decode(state.model, replace_slot(code, attr_index, mean))


def discriminator_update(
    state: TrainState,
    value_key: int,
    x_trans: torch.Tensor,
    x_ref: torch.Tensor,
) -> float:
    """Update D_v ``discriminator_steps`` times on one batch.

    ``x_trans`` is detached, so no gradient reaches E or G.

    Returns:
        Discrimination loss of the first update
    """
    optimizer = state.disc_optimizers[value_key]
    fake = x_trans.detach()
    first = None
    for _ in range(state.config.discriminator_steps):
        loss = discriminator_loss_from_logits(
            state.model.discriminator_logits(value_key, fake),
            state.model.discriminator_logits(value_key, x_ref),
        )
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        if first is None:
            first = float(loss.item())
    return first


def train_step(
    state: TrainState,
    manifest: DatasetManifest,
    attribute: str,
    value: str,
) -> Tuple[TrainState, LossReport]:
    """One generator and discriminator update for a single attribute value.

    Args:
        state: Training state (mutated in place and returned)
        manifest: Training data
        attribute: Target attribute
        value: Target value; references are sampled from its domain

    Returns:
        (state, LossReport)

    Raises:
        SamplingError: If the value's domain is empty
        TrainingDivergenceError: If a loss is non-finite or explodes
    """
    config = state.config
    model = state.model
    weights = config.effective_weights
    attr_index, _, value_key = state.schema.value_index(attribute, value)

    src = sample_indices(manifest, None, config.batch_size, state.rng)
    ref = sample_indices(manifest, (attribute, value), config.batch_size, state.rng)
    x_src = _load_batch(state, manifest, src)
    x_ref = _load_batch(state, manifest, ref)

    model.train()
    aug_attr = augmentation_decision(
        state.rng, config.multiplex_augment_prob, state.schema.n, attr_index
    )
    if aug_attr is not None:
        x_src = _augment(state, x_src, aug_attr)

    disc = model.discriminator(value_key)
    disc.requires_grad_(False)
    try:
        z_src = translate.encode(model, x_src)
        z_ref = translate.encode(model, x_ref)
        target_slot = z_ref.slots[attr_index]
        if config.mode == "domain":
            target_slot = target_slot.mean(dim=0)
        x_trans = translate.decode(model, replace_slot(z_src, attr_index, target_slot))
        z_trans = translate.encode(model, x_trans)
        x_back = translate.back_translate(model, x_trans, z_src, attr_index, z_trans=z_trans)

        l_trans = transfer_loss_from_logits(model.discriminator_logits(value_key, x_trans))
        l_back = back_transfer_loss(x_src, x_back, weights.metric, weights.huber_delta)
        if config.mode == "instance" and weights.lambda3 > 0:
            x_attr = translate.attribute_cycle(model, x_trans, z_ref, attr_index, z_trans=z_trans)
            x_target = x_ref if weights.attr_target == "reference" else x_trans
            l_attr = attribute_consistency_loss(x_attr, x_target, weights.metric, weights.huber_delta)
        else:
            l_attr = torch.zeros((), dtype=x_src.dtype, device=x_src.device)
        gen_total = generation_loss(l_trans, l_back, l_attr, weights)
    finally:
        disc.requires_grad_(True)

    with torch.no_grad():
        l_dis = discriminator_loss_from_logits(
            model.discriminator_logits(value_key, x_trans.detach()),
            model.discriminator_logits(value_key, x_ref),
        )
    report = LossReport(
        value_key=value_key,
        transfer=float(l_trans.item()),
        back=float(l_back.item()),
        attr=float(l_attr.item()),
        generator_total=float(gen_total.item()),
        discriminator=float(l_dis.item()),
    )
    if not report.is_finite() or abs(report.generator_total) > config.divergence_threshold:
        raise TrainingDivergenceError(
            f"Training diverged on {attribute}={value}", report, iteration=state.iteration + 1
        )

    state.gen_optimizer.zero_grad(set_to_none=True)
    gen_total.backward()
    state.gen_optimizer.step()

    discriminator_update(state, value_key, x_trans, x_ref)

    ref_slots = z_ref.slots[attr_index].detach()
    state.registry.update(attribute, value, ref_slots)
    state.frozen_registry.update(attribute, value, ref_slots)

    logger.debug(
        f"iter {state.iteration + 1} {attribute}={value}: trans={report.transfer:.4f} "
        f"back={report.back:.4f} attr={report.attr:.4f} dis={report.discriminator:.4f}"
    )
    return state, report


def train_iteration(
    state: TrainState,
    manifest: DatasetManifest,
    schema: Optional[AttributeSchema] = None,
    on_report: Optional[Callable[[int, LossReport], None]] = None,
) -> Tuple[TrainState, List[LossReport]]:
    """Run one step per attribute value, in schema order.

    Args:
        state: Training state
        manifest: Training data
        schema: Schema to iterate (defaults to the model's)
        on_report: Called with (iteration, report) after each step

    Returns:
        (state, reports), one report per attribute value
    """
    schema = schema or state.schema
    iteration = state.iteration + 1
    reports: List[LossReport] = []
    for entry in schema.entries():
        state, report = train_step(state, manifest, entry.attribute, entry.value)
        reports.append(report)
        if on_report is not None:
            on_report(iteration, report)
    state.iteration = iteration
    return state, reports
