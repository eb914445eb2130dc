"""Encoder, generator and per-value discriminators.

All three networks follow one scalable template so the same code serves the
128px reference configuration and the 64px desk-scale one::

    encoder:        7x7 conv(b) -> 3x3/2 conv(2b) -> 3x3/2 conv(4b)
                    -> residual block projecting to the layout's channels
    generator:      7x7 conv(4b) -> 2 residual blocks
                    -> 3x3/2 deconv(2b) -> 3x3/2 deconv(b) -> 7x7 conv(3) -> tanh
    discriminator:  4x4/2 convs (d, 2d, 4d, 8d, 16d) with leaky activation
                    -> valid conv over the remaining grid -> sigmoid
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Union

import torch
import torch.nn as nn

from slotswap.losses.objectives import probability_eps
from slotswap.nets.exceptions import (
    DiscriminatorKeyError,
    NetworkConfigError,
    NetworkShapeError,
)
from slotswap.schema import AttributeSchema, SlotLayout, build_layout

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("instance", "batch")
MAX_DISCRIMINATOR_STAGES = 5
MIN_DISCRIMINATOR_GRID = 4
INIT_STD = 0.02


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters.

    Attributes:
        input_size: Square image side in pixels
        base_channels: Width ``b`` of encoder and generator
        layout: Slot layout of the latent grid
        discriminator_base_channels: Width ``d`` of every discriminator
        normalization: 'instance' (default) or 'batch'
        negative_slope: Leaky activation slope of the discriminators
    """
    input_size: int
    base_channels: int
    layout: SlotLayout
    discriminator_base_channels: int
    normalization: str = "instance"
    negative_slope: float = 0.2

    def __post_init__(self) -> None:
        if self.input_size <= 0 or self.input_size % 4 != 0:
            raise NetworkConfigError(
                f"input_size must be a positive multiple of 4, got {self.input_size}"
            )
        if self.base_channels <= 0 or self.discriminator_base_channels <= 0:
            raise NetworkConfigError("Channel counts must be positive")
        latent = self.input_size // 4
        if tuple(self.layout.spatial) != (latent, latent):
            raise NetworkConfigError(
                f"Layout grid {tuple(self.layout.spatial)} does not match "
                f"input_size/4 = ({latent}, {latent})"
            )
        if self.normalization not in NORMALIZATIONS:
            raise NetworkConfigError(
                f"normalization must be one of {NORMALIZATIONS}, got '{self.normalization}'"
            )
        if not 0.0 <= self.negative_slope < 1.0:
            raise NetworkConfigError(
                f"negative_slope must be in [0, 1), got {self.negative_slope}"
            )

    @property
    def discriminator_stages(self) -> int:
        """Number of stride-2 discriminator stages.

        Up to five stages, fewer when the input is too small to keep at least
        a 4x4 grid before the output conv.
        """
        size, stages = self.input_size, 0
        while stages < MAX_DISCRIMINATOR_STAGES and size // 2 >= MIN_DISCRIMINATOR_GRID:
            size //= 2
            stages += 1
        return stages

    @property
    def discriminator_grid(self) -> int:
        """Side of the feature grid seen by the discriminator's output conv."""
        return self.input_size // (2 ** self.discriminator_stages)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_size": self.input_size,
            "base_channels": self.base_channels,
            "layout": self.layout.to_dict(),
            "discriminator_base_channels": self.discriminator_base_channels,
            "normalization": self.normalization,
            "negative_slope": self.negative_slope,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkConfig":
        """Rebuild a config from ``to_dict`` output (e.g. a checkpoint)."""
        try:
            return cls(
                input_size=int(data["input_size"]),
                base_channels=int(data["base_channels"]),
                layout=SlotLayout.from_dict(data["layout"]),
                discriminator_base_channels=int(data["discriminator_base_channels"]),
                normalization=str(data.get("normalization", "instance")),
                negative_slope=float(data.get("negative_slope", 0.2)),
            )
        except (KeyError, TypeError) as e:
            raise NetworkConfigError(f"Invalid network config: {e}") from e

    @classmethod
    def from_section(
        cls,
        section: Mapping[str, Any],
        schema: AttributeSchema,
        input_size: int,
    ) -> "NetworkConfig":
        """Build a config from the ``network`` section of a settings file.

        Args:
            section: Keys base_channels, discriminator_base_channels,
                uniqueness_channels, per_attribute_channels, normalization,
                negative_slope
            schema: Attribute schema (one slot per attribute)
            input_size: Image side of the dataset

        Raises:
            NetworkConfigError: On unknown keys or invalid values
        """
        allowed = {
            "base_channels",
            "discriminator_base_channels",
            "uniqueness_channels",
            "per_attribute_channels",
            "normalization",
            "negative_slope",
        }
        unknown = sorted(set(section) - allowed)
        if unknown:
            raise NetworkConfigError(f"Unknown network keys: {', '.join(unknown)}")
        if input_size % 4 != 0:
            raise NetworkConfigError(f"input_size must be a multiple of 4, got {input_size}")
        latent = input_size // 4
        layout = build_layout(
            schema,
            (latent, latent),
            int(section.get("uniqueness_channels", 64)),
            int(section.get("per_attribute_channels", 16)),
        )
        return cls(
            input_size=int(input_size),
            base_channels=int(section.get("base_channels", 16)),
            layout=layout,
            discriminator_base_channels=int(section.get("discriminator_base_channels", 16)),
            normalization=str(section.get("normalization", "instance")),
            negative_slope=float(section.get("negative_slope", 0.2)),
        )


def _norm(kind: str, channels: int) -> nn.Module:
    if kind == "batch":
        return nn.BatchNorm2d(channels)
    return nn.InstanceNorm2d(channels, affine=True)


class ConvBlock(nn.Sequential):
    """Conv (or transposed conv) -> normalization -> activation."""

    def __init__(
        self,
        input_ch: int,
        output_ch: int,
        norm: str,
        transpose: bool = False,
        activation: Optional[nn.Module] = None,
        **kwargs: Any,
    ):
        conv_cls = nn.ConvTranspose2d if transpose else nn.Conv2d
        super().__init__(
            conv_cls(input_ch, output_ch, **kwargs),
            _norm(norm, output_ch),
            activation if activation is not None else nn.ReLU(),
        )


class ResidualBlock(nn.Module):
    """Two 3x3 convs with a skip connection.

    When ``output_ch`` differs from ``input_ch`` the skip path is a 1x1
    projection. ``final_norm=False`` leaves the block output unnormalized.
    """

    def __init__(self, input_ch: int, output_ch: int, norm: str, final_norm: bool = True):
        super().__init__()
        layers: List[nn.Module] = [
            ConvBlock(input_ch, output_ch, norm, kernel_size=3, padding=1),
            nn.Conv2d(output_ch, output_ch, kernel_size=3, padding=1),
        ]
        if final_norm:
            layers.append(_norm(norm, output_ch))
        self.res = nn.Sequential(*layers)
        self.skip = (
            nn.Identity()
            if input_ch == output_ch
            else nn.Conv2d(input_ch, output_ch, kernel_size=1)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.skip(x) + self.res(x)


class Encoder(nn.Module):
    """Image (N×3×S×S) -> latent grid (N×C×S/4×S/4)."""

    def __init__(self, config: NetworkConfig):
        super().__init__()
        b, norm = config.base_channels, config.normalization
        self.net = nn.Sequential(
            ConvBlock(3, b, norm, kernel_size=7, padding=3),
            ConvBlock(b, 2 * b, norm, kernel_size=3, stride=2, padding=1),
            ConvBlock(2 * b, 4 * b, norm, kernel_size=3, stride=2, padding=1),
            ResidualBlock(4 * b, config.layout.total_channels, norm, final_norm=False),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class Generator(nn.Module):
    """Latent grid -> image in [-1, 1]."""

    def __init__(self, config: NetworkConfig):
        super().__init__()
        b, norm = config.base_channels, config.normalization
        self.net = nn.Sequential(
            ConvBlock(config.layout.total_channels, 4 * b, norm, kernel_size=7, padding=3),
            ResidualBlock(4 * b, 4 * b, norm),
            ResidualBlock(4 * b, 4 * b, norm),
            ConvBlock(4 * b, 2 * b, norm, transpose=True,
                      kernel_size=3, stride=2, padding=1, output_padding=1),
            ConvBlock(2 * b, b, norm, transpose=True,
                      kernel_size=3, stride=2, padding=1, output_padding=1),
            nn.Conv2d(b, 3, kernel_size=7, padding=3),
            nn.Tanh(),
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.net(z)


class Discriminator(nn.Module):
    """Image -> one real/fake logit per image."""

    def __init__(self, config: NetworkConfig):
        super().__init__()
        d, norm = config.discriminator_base_channels, config.normalization
        layers: List[nn.Module] = []
        in_ch = 3
        for stage in range(config.discriminator_stages):
            out_ch = d * (2 ** stage)
            layers.append(
                ConvBlock(
                    in_ch, out_ch, norm,
                    activation=nn.LeakyReLU(config.negative_slope),
                    kernel_size=4, stride=2, padding=1,
                )
            )
            in_ch = out_ch
        layers.append(nn.Conv2d(in_ch, 1, kernel_size=config.discriminator_grid))
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).flatten(1).squeeze(1)


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, INIT_STD)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, (nn.BatchNorm2d, nn.InstanceNorm2d)) and module.affine:
        nn.init.normal_(module.weight, 1.0, INIT_STD)
        nn.init.zeros_(module.bias)


class SlotSwapModel(nn.Module):
    """Encoder, generator and one discriminator per attribute value.

    Discriminators are stored in a ModuleList indexed by the global value
    index of the schema (``schema.value_index(attr, value)[2]``).
    """

    def __init__(self, config: NetworkConfig, schema: AttributeSchema):
        super().__init__()
        if config.layout.n != schema.n:
            raise NetworkConfigError(
                f"Layout has {config.layout.n} attribute slots but schema has {schema.n} attributes"
            )
        self.config = config
        self.schema = schema
        self.encoder = Encoder(config)
        self.generator = Generator(config)
        self.discriminators = nn.ModuleList(Discriminator(config) for _ in range(schema.m))

    @property
    def layout(self) -> SlotLayout:
        return self.config.layout

    def discriminator(self, value_key: int) -> Discriminator:
        """Return D_v for a global value index.

        Raises:
            DiscriminatorKeyError: If value_key is outside [0, m)
        """
        if not 0 <= value_key < len(self.discriminators):
            raise DiscriminatorKeyError(
                f"No discriminator for value key {value_key} (m = {len(self.discriminators)})"
            )
        return self.discriminators[value_key]

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        s = self.config.input_size
        _check_shape(images, (3, s, s), "encoder input")
        return self.encoder(images)

    def generate(self, latent: torch.Tensor) -> torch.Tensor:
        h, w = self.layout.spatial
        _check_shape(latent, (self.layout.total_channels, h, w), "generator input")
        return self.generator(latent)

    def discriminator_logits(self, value_key: int, images: torch.Tensor) -> torch.Tensor:
        """Pre-sigmoid D_v score per image; training losses are computed from these."""
        d = self.discriminator(value_key)
        s = self.config.input_size
        _check_shape(images, (3, s, s), "discriminator input")
        return d(images)

    def discriminate(self, value_key: int, images: torch.Tensor) -> torch.Tensor:
        """Probability that each image is a real sample of value ``value_key``."""
        eps = probability_eps(images.dtype)
        return torch.sigmoid(self.discriminator_logits(value_key, images)).clamp(eps, 1.0 - eps)

    def generator_parameters(self) -> Iterator[nn.Parameter]:
        """Parameters updated by the generation loss (E and G)."""
        yield from self.encoder.parameters()
        yield from self.generator.parameters()

    def parameter_counts(self) -> Dict[str, int]:
        """Number of scalar parameters per network, keyed for checkpoints."""
        counts = {
            "encoder": _count(self.encoder),
            "generator": _count(self.generator),
        }
        for key, d in enumerate(self.discriminators):
            counts[f"discriminator/{key}"] = _count(d)
        return counts


def _count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def _check_shape(tensor: torch.Tensor, expected: tuple, what: str) -> None:
    if tensor.dim() != 4 or tuple(tensor.shape[1:]) != tuple(expected):
        raise NetworkShapeError(
            f"Unexpected {what} shape",
            expected=(None, *expected),
            actual=tuple(tensor.shape),
        )


def build_models(
    config: NetworkConfig,
    schema: AttributeSchema,
    init_seed: int = 0,
    dtype: torch.dtype = torch.float32,
    device: Union[str, torch.device] = "cpu",
) -> SlotSwapModel:
    """Construct and initialize all networks.

    Initialization draws from a forked torch generator seeded with
    ``init_seed``, so the global random state is left untouched and the same
    seed always yields the same weights.

    Args:
        config: Network configuration
        schema: Attribute schema (m discriminators are built)
        init_seed: Seed of the weight initialization
        dtype: Parameter dtype (float64 for gradient checks)
        device: Target device

    Returns:
        Initialized SlotSwapModel in training mode

    Raises:
        NetworkConfigError: If config and schema disagree

    Examples:
        >>> model = build_models(config, schema, init_seed=0)
        >>> model.encode(torch.zeros(2, 3, 64, 64)).shape
        torch.Size([2, 112, 16, 16])
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(init_seed)
        model = SlotSwapModel(config, schema)
        model.apply(_init_weights)
    model = model.to(device=device, dtype=dtype)
    counts = model.parameter_counts()
    logger.debug(
        f"Built networks: encoder={counts['encoder']}, generator={counts['generator']}, "
        f"{schema.m} discriminators x {counts.get('discriminator/0', 0)} parameters"
    )
    return model


def encoder_forward(models: SlotSwapModel, images: torch.Tensor) -> torch.Tensor:
    """E(x) with shape validation."""
    return models.encode(images)


def generator_forward(models: SlotSwapModel, latent: torch.Tensor) -> torch.Tensor:
    """G(z) with shape validation."""
    return models.generate(latent)


def discriminator_forward(
    models: SlotSwapModel,
    value_key: int,
    images: torch.Tensor,
) -> torch.Tensor:
    """D_v(x): one probability per image, clamped into (0, 1)."""
    return models.discriminate(value_key, images)
