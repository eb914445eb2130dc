"""Pixel conversions and PNG I/O.

Images on disk are 8-bit RGB PNGs. In memory a single image is an H×W×3
float32 array in [-1, 1]; batches fed to the networks are N×3×H×W tensors.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import torch
from PIL import Image

from slotswap.data.exceptions import DatasetError

logger = logging.getLogger(__name__)


@dataclass
class Jitter:
    """Sample-specific rendering parameters of a sprite.

    Attributes:
        dx: Horizontal offset of the sprite centre from the image centre (px)
        dy: Vertical offset of the sprite centre from the image centre (px)
        bg: Background grey level (0-255)
        rot: Rotation in degrees; None when it cannot be estimated
    """
    dx: float
    dy: float
    bg: int
    rot: Optional[float]

    def to_dict(self) -> Dict[str, Optional[float]]:
        """Return the manifest form of the jitter."""
        return {"dx": self.dx, "dy": self.dy, "bg": self.bg, "rot": self.rot}

    @classmethod
    def from_dict(cls, data: Dict[str, Optional[float]]) -> "Jitter":
        """Create a Jitter from its manifest form."""
        rot = data.get("rot")
        return cls(
            dx=float(data["dx"]),
            dy=float(data["dy"]),
            bg=int(data["bg"]),
            rot=None if rot is None else float(rot),
        )


@dataclass
class LabeledImage:
    """Pixel data with one value label per schema attribute.

    Attributes:
        pixels: H×W×3 float32 array in [-1, 1]
        labels: Attribute name -> value name
        jitter: Recorded rendering jitter (synthetic data only)
        path: Relative manifest path the image was loaded from (if any)
    """
    pixels: np.ndarray
    labels: Dict[str, str]
    jitter: Optional[Jitter] = None
    path: Optional[str] = None


def to_float(pixels: np.ndarray) -> np.ndarray:
    """Convert 8-bit pixels to float32 in [-1, 1] (x / 127.5 - 1)."""
    return (pixels.astype(np.float32) / 127.5 - 1.0).astype(np.float32)


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """Convert [-1, 1] floats (or 8-bit input, unchanged) to 8-bit pixels."""
    if pixels.dtype == np.uint8:
        return pixels
    scaled = np.rint((np.clip(pixels, -1.0, 1.0) + 1.0) * 127.5)
    return scaled.astype(np.uint8)


def read_png(path: Union[str, Path]) -> np.ndarray:
    """Read an RGB PNG as an H×W×3 float32 array in [-1, 1].

    Raises:
        DatasetError: If the file cannot be read
    """
    try:
        with Image.open(path) as image:
            return to_float(np.asarray(image.convert("RGB")))
    except OSError as e:
        raise DatasetError(f"Failed to read image {path}: {e}") from e


def write_png(path: Union[str, Path], pixels: np.ndarray) -> None:
    """Write an H×W×3 image (float in [-1, 1] or uint8) as an RGB PNG.

    Raises:
        DatasetError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint8(pixels)).save(path, format="PNG")
    except OSError as e:
        raise DatasetError(f"Failed to write image {path}: {e}") from e


def to_batch(
    images: Sequence[Union[LabeledImage, np.ndarray]],
    dtype: torch.dtype = torch.float32,
    device: Union[str, torch.device] = "cpu",
) -> torch.Tensor:
    """Stack images into an N×3×H×W tensor."""
    arrays = [img.pixels if isinstance(img, LabeledImage) else img for img in images]
    stacked = np.stack([to_float(a) if a.dtype == np.uint8 else a for a in arrays])
    return torch.from_numpy(stacked).permute(0, 3, 1, 2).contiguous().to(device=device, dtype=dtype)


def from_batch(batch: torch.Tensor) -> np.ndarray:
    """Convert an N×3×H×W tensor back to N×H×W×3 float32 numpy."""
    return batch.detach().to("cpu", torch.float32).permute(0, 2, 3, 1).numpy()
