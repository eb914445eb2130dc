"""Procedural sprite rendering and the analytic label oracle.

Each attribute of the schema controls exactly one render parameter kind:
the sprite ``shape``, its RGB ``color`` or its ``radius`` (circumradius as a
fraction of the image side). Everything else - position, background shade
and rotation - is drawn from the random source and recorded as ``Jitter``.
"""

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from slotswap.data.exceptions import DatasetValidationError
from slotswap.data.images import Jitter, LabeledImage, to_float, to_uint8
from slotswap.schema import AttributeSchema, SchemaError

logger = logging.getLogger(__name__)

RENDER_KINDS = ("shape", "color", "radius")

# Area of each shape divided by its squared circumradius.
SHAPE_AREA_RATIO = {
    "circle": math.pi,
    "square": 2.0,
    "triangle": 3.0 * math.sqrt(3.0) / 4.0,
}

# Angle of the first vertex at zero rotation, and the rotational symmetry.
_SHAPE_VERTEX_BASE = {"square": 45.0, "triangle": -90.0}
_SHAPE_SYMMETRY = {"square": 90.0, "triangle": 120.0}


@dataclass(frozen=True)
class JitterConfig:
    """Ranges of the sample-specific rendering parameters.

    Attributes:
        position_fraction: Max centre offset as a fraction of the image side
        background: Inclusive (low, high) grey level range of the background
        rotation: Max absolute rotation in degrees
    """
    position_fraction: float = 0.25
    background: Tuple[int, int] = (20, 80)
    rotation: float = 15.0

    def __post_init__(self) -> None:
        if self.position_fraction < 0 or self.rotation < 0:
            raise DatasetValidationError("Jitter ranges must be non-negative")
        low, high = self.background
        if not 0 <= low <= high <= 255:
            raise DatasetValidationError(
                f"Background range must satisfy 0 <= low <= high <= 255, got {self.background}"
            )


@dataclass(frozen=True)
class SpriteConfig:
    """Everything needed to render a labelled sprite.

    Attributes:
        image_size: Side of the square image in pixels (>= 16)
        schema: Attribute schema the labels follow
        render_map: attribute -> value -> {kind: parameter}
        jitter: Sample-specific parameter ranges
        seed: Base seed for dataset generation
        defaults: Render parameters for kinds no attribute controls
    """
    image_size: int
    schema: AttributeSchema
    render_map: Mapping[str, Mapping[str, Mapping[str, Any]]]
    jitter: JitterConfig = field(default_factory=JitterConfig)
    seed: int = 0
    defaults: Mapping[str, Any] = field(
        default_factory=lambda: {"shape": "circle", "color": [220, 40, 40], "radius": 0.2}
    )

    def __post_init__(self) -> None:
        if self.image_size < 16:
            raise DatasetValidationError(f"image_size must be >= 16, got {self.image_size}")

        controlled: Dict[str, str] = {}
        for attribute in self.schema.attributes:
            entries = self.render_map.get(attribute.name)
            if entries is None:
                raise DatasetValidationError(f"No render entries for attribute '{attribute.name}'")
            kinds = set()
            for value in attribute.values:
                params = entries.get(value)
                if not params or len(params) != 1:
                    raise DatasetValidationError(
                        f"Render entry {attribute.name}={value} must set exactly one of "
                        f"{', '.join(RENDER_KINDS)}"
                    )
                (kind, param), = params.items()
                _validate_param(kind, param, f"{attribute.name}={value}")
                kinds.add(kind)
            if len(kinds) != 1:
                raise DatasetValidationError(
                    f"Attribute '{attribute.name}' mixes render kinds: {sorted(kinds)}"
                )
            kind = kinds.pop()
            if kind in controlled:
                raise DatasetValidationError(
                    f"Attributes '{controlled[kind]}' and '{attribute.name}' both control {kind}"
                )
            controlled[kind] = attribute.name

        for kind in RENDER_KINDS:
            if kind not in controlled:
                _validate_param(kind, self.defaults.get(kind), f"defaults.{kind}")

    def kind_of(self, attribute: str) -> str:
        """Render parameter kind an attribute controls."""
        entries = self.render_map[attribute]
        first = next(iter(entries.values()))
        return next(iter(first))

    def attribute_for(self, kind: str) -> Optional[str]:
        """Attribute controlling a render kind, or None if it is fixed."""
        for attribute in self.schema.names:
            if self.kind_of(attribute) == kind:
                return attribute
        return None

    def render_params(self, labels: Mapping[str, str]) -> Tuple[str, Tuple[int, int, int], float]:
        """Resolve labels to (shape, rgb color, radius fraction).

        Raises:
            DatasetValidationError: If labels are incomplete or unknown
        """
        try:
            self.schema.validate_labels(labels)
        except SchemaError as e:
            raise DatasetValidationError(f"Invalid sprite labels {dict(labels)}: {e}") from e

        params = dict(self.defaults)
        for attribute, value in labels.items():
            params.update(self.render_map[attribute][value])
        color = tuple(int(c) for c in params["color"])
        return str(params["shape"]), color, float(params["radius"])

    def options(self, kind: str) -> Dict[str, Any]:
        """Value name -> parameter for the attribute controlling ``kind``."""
        attribute = self.attribute_for(kind)
        if attribute is None:
            return {}
        return {value: params[kind] for value, params in self.render_map[attribute].items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SpriteConfig":
        """Create a SpriteConfig from the ``sprites`` config section.

        Raises:
            DatasetValidationError: If keys are unknown or values invalid
        """
        known = {"image_size", "attributes", "render", "jitter", "seed", "defaults"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DatasetValidationError(f"Unknown sprite config keys: {', '.join(unknown)}")
        try:
            schema = AttributeSchema.from_dict({"attributes": data["attributes"]})
        except SchemaError as e:
            raise DatasetValidationError(f"Invalid sprite schema: {e}") from e

        jitter_data = dict(data.get("jitter", {}))
        unknown = sorted(set(jitter_data) - {"position_fraction", "background", "rotation"})
        if unknown:
            raise DatasetValidationError(f"Unknown jitter keys: {', '.join(unknown)}")
        if "background" in jitter_data:
            jitter_data["background"] = tuple(int(b) for b in jitter_data["background"])

        kwargs: Dict[str, Any] = {}
        if "defaults" in data:
            kwargs["defaults"] = copy.deepcopy(dict(data["defaults"]))
        return cls(
            image_size=int(data.get("image_size", 64)),
            schema=schema,
            render_map=copy.deepcopy(dict(data.get("render", {}))),
            jitter=JitterConfig(**jitter_data),
            seed=int(data.get("seed", 0)),
            **kwargs,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Return the config-section form (inverse of ``from_dict``)."""
        return {
            "image_size": self.image_size,
            "attributes": self.schema.to_dict()["attributes"],
            "render": copy.deepcopy({k: dict(v) for k, v in self.render_map.items()}),
            "jitter": {
                "position_fraction": self.jitter.position_fraction,
                "background": list(self.jitter.background),
                "rotation": self.jitter.rotation,
            },
            "seed": self.seed,
            "defaults": copy.deepcopy(dict(self.defaults)),
        }


def _validate_param(kind: str, param: Any, where: str) -> None:
    if kind == "shape":
        if param not in SHAPE_AREA_RATIO:
            raise DatasetValidationError(
                f"{where}: unknown shape {param!r}, expected one of {sorted(SHAPE_AREA_RATIO)}"
            )
    elif kind == "color":
        if (
            not isinstance(param, (list, tuple))
            or len(param) != 3
            or not all(0 <= int(c) <= 255 for c in param)
        ):
            raise DatasetValidationError(f"{where}: color must be 3 ints in [0, 255], got {param!r}")
    elif kind == "radius":
        if not isinstance(param, (int, float)) or not 0 < float(param) <= 0.5:
            raise DatasetValidationError(f"{where}: radius must be in (0, 0.5], got {param!r}")
    else:
        raise DatasetValidationError(f"{where}: unknown render kind {kind!r}")


def draw_jitter(config: SpriteConfig, rng: np.random.Generator) -> Jitter:
    """Draw the sample-specific parameters of one sprite."""
    max_shift = config.jitter.position_fraction * config.image_size
    low, high = config.jitter.background
    return Jitter(
        dx=float(rng.uniform(-max_shift, max_shift)),
        dy=float(rng.uniform(-max_shift, max_shift)),
        bg=int(rng.integers(low, high + 1)),
        rot=float(rng.uniform(-config.jitter.rotation, config.jitter.rotation)),
    )


def _vertices(shape: str, cx: float, cy: float, r: float, rot: float) -> List[Tuple[float, float]]:
    count = 4 if shape == "square" else 3
    step = 360.0 / count
    base = _SHAPE_VERTEX_BASE[shape] + rot
    return [
        (
            cx + r * math.cos(math.radians(base + k * step)),
            cy + r * math.sin(math.radians(base + k * step)),
        )
        for k in range(count)
    ]


def render_sprite(config: SpriteConfig, labels: Mapping[str, str], jitter: Jitter) -> np.ndarray:
    """Rasterise a sprite deterministically.

    Args:
        config: Sprite configuration
        labels: Complete label map
        jitter: Sample-specific parameters

    Returns:
        H×W×3 uint8 array

    Raises:
        DatasetValidationError: If labels are incomplete or unknown
    """
    shape, color, radius = config.render_params(labels)
    size = config.image_size
    image = Image.new("RGB", (size, size), (jitter.bg, jitter.bg, jitter.bg))
    draw = ImageDraw.Draw(image)

    cx = size / 2.0 + jitter.dx
    cy = size / 2.0 + jitter.dy
    r = radius * size
    if shape == "circle":
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=color)
    else:
        draw.polygon(_vertices(shape, cx, cy, r, jitter.rot or 0.0), fill=color)
    return np.asarray(image, dtype=np.uint8).copy()


def generate_sprite(
    config: SpriteConfig,
    labels: Mapping[str, str],
    rng: np.random.Generator,
) -> LabeledImage:
    """Render one labelled sprite with freshly drawn jitter.

    Attribute-controlled properties depend only on ``labels``; position,
    background and rotation depend only on ``rng``.

    Raises:
        DatasetValidationError: If a label is missing
    """
    config.render_params(labels)
    jitter = draw_jitter(config, rng)
    pixels = render_sprite(config, labels, jitter)
    return LabeledImage(pixels=to_float(pixels), labels=dict(labels), jitter=jitter)


@dataclass
class SpriteReading:
    """What the analytic oracle reads from one image.

    Attributes:
        labels: Attribute -> recovered value (None when no sprite is visible)
        jitter: Re-estimated jitter (None when no sprite is visible)
        area: Foreground pixel count
    """
    labels: Dict[str, Optional[str]]
    jitter: Optional[Jitter]
    area: int


class SpriteOracle:
    """Analytic label reader for rendered sprites.

    Color is the configured color nearest to the mean foreground RGB, shape
    comes from how far the foreground reaches relative to its area (corners
    reach further than a disc of equal area), and size compares the implied
    circumradius against the configured radii. The foreground is every pixel
    whose channel spread exceeds ``saturation_threshold``; backgrounds are
    grey by construction.

    Attributes:
        config: Sprite configuration the oracle reads against
        saturation_threshold: Min channel spread (0-255) of foreground pixels
    """

    def __init__(self, config: SpriteConfig, saturation_threshold: int = 40) -> None:
        """Initialize the oracle.

        Args:
            config: Sprite configuration
            saturation_threshold: Min channel spread of foreground pixels
        """
        self.config = config
        self.saturation_threshold = saturation_threshold
        self._colors = {v: np.asarray(c, dtype=np.float64) for v, c in config.options("color").items()}
        self._shapes = config.options("shape")
        self._radii = {v: float(r) * config.image_size for v, r in config.options("radius").items()}

    def foreground(self, pixels: np.ndarray) -> np.ndarray:
        """Boolean H×W mask of sprite pixels."""
        rgb = to_uint8(pixels).astype(np.int16)
        spread = rgb.max(axis=2) - rgb.min(axis=2)
        return spread > self.saturation_threshold

    def read(self, pixels: np.ndarray) -> SpriteReading:
        """Recover labels and jitter from one H×W×3 image."""
        rgb = to_uint8(pixels).astype(np.float64)
        mask = self.foreground(pixels)
        area = int(mask.sum())
        if area == 0:
            return SpriteReading({name: None for name in self.config.schema.names}, None, 0)

        ys, xs = np.nonzero(mask)
        cx, cy = xs.mean(), ys.mean()
        dist = np.hypot(xs - cx, ys - cy)
        reach = max(float(np.percentile(dist, 99.5)), 0.5)
        ratio = area / reach ** 2

        labels: Dict[str, Optional[str]] = {}

        shape_attr = self.config.attribute_for("shape")
        if shape_attr is not None:
            value = min(
                self._shapes,
                key=lambda v: abs(math.log(ratio) - math.log(SHAPE_AREA_RATIO[self._shapes[v]])),
            )
            labels[shape_attr] = value
            shape = self._shapes[value]
        else:
            shape = str(self.config.defaults["shape"])

        color_attr = self.config.attribute_for("color")
        if color_attr is not None:
            mean = rgb[mask].mean(axis=0)
            labels[color_attr] = min(
                self._colors, key=lambda v: float(np.sum((self._colors[v] - mean) ** 2))
            )

        radius_attr = self.config.attribute_for("radius")
        if radius_attr is not None:
            implied = math.sqrt(area / SHAPE_AREA_RATIO[shape])
            labels[radius_attr] = min(self._radii, key=lambda v: abs(self._radii[v] - implied))

        background = rgb[~mask]
        bg = int(round(float(np.median(background.mean(axis=1))))) if background.size else 0
        size = self.config.image_size
        jitter = Jitter(
            dx=float(cx - size / 2.0),
            dy=float(cy - size / 2.0),
            bg=bg,
            rot=self._estimate_rotation(shape, xs - cx, ys - cy, dist),
        )
        return SpriteReading(labels, jitter, area)

    def read_labels(self, pixels: np.ndarray) -> Dict[str, Optional[str]]:
        """Recover only the labels from one image."""
        return self.read(pixels).labels

    @staticmethod
    def _estimate_rotation(
        shape: str, dx: np.ndarray, dy: np.ndarray, dist: np.ndarray
    ) -> Optional[float]:
        if shape not in _SHAPE_SYMMETRY or dist.size < 8:
            return None
        symmetry = _SHAPE_SYMMETRY[shape]
        fold = 360.0 / symmetry
        far = dist >= np.percentile(dist, 98)
        angles = np.degrees(np.arctan2(dy[far], dx[far])) - _SHAPE_VERTEX_BASE[shape]
        phase = np.radians(angles * fold)
        mean_phase = math.degrees(math.atan2(np.sin(phase).mean(), np.cos(phase).mean()))
        return float(mean_phase / fold)


def estimate_jitter(config: SpriteConfig, pixels: np.ndarray) -> Optional[Jitter]:
    """Re-estimate (dx, dy, bg, rot) from an image; None if no sprite is visible."""
    return SpriteOracle(config).read(pixels).jitter


def rotation_error(shape: str, recorded: float, estimated: Optional[float]) -> Optional[float]:
    """Absolute rotation difference modulo the shape's symmetry, in degrees."""
    if estimated is None or shape not in _SHAPE_SYMMETRY:
        return None
    symmetry = _SHAPE_SYMMETRY[shape]
    diff = (estimated - recorded) % symmetry
    return float(min(diff, symmetry - diff))
